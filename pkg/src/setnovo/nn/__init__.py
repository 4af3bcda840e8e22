from .autograd import Tensor, no_grad
from .layers import Embedding, Linear, LSTMCell, Module, PointwiseConv1d, TNet
from .losses import cross_entropy, focal_loss
from .model import SequencingModel
from .optim import Adam, AdamState, PlateauHalving, adam_step, halving_points, lr_schedule
