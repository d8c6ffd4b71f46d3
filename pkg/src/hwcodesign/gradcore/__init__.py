from .nn import MlpModel, cross_entropy, l1_loss, mse_loss
from .optim import Adam, clip_grad_norm
from .scaling import RobustScaler
from .tensor import Tensor, as_tensor, concat, parameter
