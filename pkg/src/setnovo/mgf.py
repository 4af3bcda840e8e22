"""Reading and writing MGF files.

Only the fields the pipeline uses are interpreted: TITLE, PEPMASS, CHARGE,
SCANS and SEQ. Other ``KEY=VALUE`` headers are kept in ``Spectrum.extra``.
"""

from __future__ import annotations

import io
import logging
import os
from typing import IO, Iterable, Iterator, List, Optional, Union

from .chem import Peptide
from .spectra import Spectrum

logger = logging.getLogger(__name__)

PathOrStream = Union[str, os.PathLike, IO]


class MgfParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


def _lines(source: PathOrStream) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r") as fh:
            yield from fh
        return
    for line in source:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        yield line


def _parse_charge(value: str) -> int:
    value = value.strip().split(" and ")[0].split(",")[0]
    sign = -1 if value.endswith("-") else 1
    return sign * int(value.rstrip("+-"))


def _build(block: dict, peaks_mz, peaks_int, start_line: int) -> Spectrum:
    if "PEPMASS" not in block:
        raise MgfParseError(start_line, "block has no PEPMASS")
    try:
        pepmass = float(block["PEPMASS"].split()[0])
    except ValueError:
        raise MgfParseError(start_line, f"bad PEPMASS {block['PEPMASS']!r}") from None
    try:
        charge = _parse_charge(block["CHARGE"]) if "CHARGE" in block else 1
    except ValueError:
        raise MgfParseError(start_line, f"bad CHARGE {block['CHARGE']!r}") from None
    annotation = None
    if block.get("SEQ"):
        try:
            annotation = Peptide.from_string(block["SEQ"])
        except ValueError as exc:
            raise MgfParseError(block["_SEQ_LINE"], str(exc)) from None
    title = block.get("TITLE", "")
    scan_id = block.get("SCANS") or title or f"block@{start_line}"
    extra = {k: v for k, v in block.items()
             if k not in ("PEPMASS", "CHARGE", "SEQ", "SCANS", "TITLE", "_SEQ_LINE")}
    try:
        return Spectrum(peaks_mz, peaks_int, pepmass, charge, scan_id=scan_id,
                        annotation=annotation, title=title, extra=extra)
    except ValueError as exc:
        raise MgfParseError(start_line, str(exc)) from None


def iter_mgf(source: PathOrStream, errors: Optional[list] = None) -> Iterator[Spectrum]:
    """Yield spectra block by block.

    A malformed block raises :class:`MgfParseError` unless ``errors`` is a
    list, in which case the error is appended, the block skipped, and parsing
    resumes at the next ``BEGIN IONS``.
    """
    in_block = False
    skipping = False
    block: dict = {}
    mzs: List[float] = []
    ints: List[float] = []
    start = 0

    def fail(err: MgfParseError):
        if errors is None:
            raise err
        logger.warning("skipping MGF block: %s", err)
        errors.append(err)

    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line[0] in "#;!/":
            continue
        upper = line.upper()
        if upper == "BEGIN IONS":
            if in_block and not skipping:
                fail(MgfParseError(lineno, "BEGIN IONS inside an open block"))
            in_block, skipping = True, False
            block, mzs, ints, start = {}, [], [], lineno
            continue
        if not in_block:
            continue
        if upper == "END IONS":
            in_block = False
            if skipping:
                continue
            try:
                yield _build(block, mzs, ints, start)
            except MgfParseError as err:
                fail(err)
            continue
        if skipping:
            continue
        if "=" in line and not line[0].isdigit():
            key, _, value = line.partition("=")
            key = key.strip().upper()
            block[key] = value.strip()
            if key == "SEQ":
                block["_SEQ_LINE"] = lineno
            continue
        parts = line.split()
        try:
            if len(parts) < 2:
                raise ValueError
            mz, intensity = float(parts[0]), float(parts[1])
        except ValueError:
            fail(MgfParseError(lineno, f"malformed peak line {line!r}"))
            skipping = True
            continue
        mzs.append(mz)
        ints.append(intensity)
    if in_block and not skipping:
        fail(MgfParseError(start, "unterminated block (missing END IONS)"))


def parse_mgf(source: PathOrStream, errors: Optional[list] = None) -> List[Spectrum]:
    return list(iter_mgf(source, errors))


def format_spectrum(spectrum: Spectrum) -> str:
    out = ["BEGIN IONS"]
    if spectrum.title:
        out.append(f"TITLE={spectrum.title}")
    out.append(f"PEPMASS={spectrum.precursor_mz:.8f}")
    out.append(f"CHARGE={spectrum.precursor_charge}+")
    if spectrum.scan_id:
        out.append(f"SCANS={spectrum.scan_id}")
    for key, value in spectrum.extra.items():
        out.append(f"{key}={value}")
    if spectrum.annotation is not None:
        out.append(f"SEQ={spectrum.annotation}")
    for mz, intensity in zip(spectrum.mz, spectrum.intensity):
        out.append(f"{mz:.5f} {intensity:.1f}")
    out.append("END IONS")
    return "\n".join(out) + "\n\n"


def write_mgf(spectra: Iterable[Spectrum], dest: PathOrStream) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w") as fh:
            write_mgf(spectra, fh)
        return
    for spectrum in spectra:
        dest.write(format_spectrum(spectrum))


def dumps(spectra: Iterable[Spectrum]) -> str:
    buf = io.StringIO()
    write_mgf(spectra, buf)
    return buf.getvalue()
