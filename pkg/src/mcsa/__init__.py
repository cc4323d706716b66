"""Multi-channel self-attention two-stream head for action recognition on precomputed features."""
from .attention import AttentionChannelParams, FeatureSample, attend, attention_bank, channel_attention
from .errors import (ConfigError, DimensionError, FormatError, MCSAError, NumericError,
                     ProtocolError)
from .regularizer import loss4
from .stream import (ChannelHeadParams, ModelConfig, StreamModel, channel_distribution,
                     cross_entropy, forward, fuse, predict)
from .trainer import TrainConfig, TrainReport, evaluate, sgd_step, train_lower, train_upper
from .transfer import KernelSpec, TransferSnapshot, loss3, mmd2, snapshot

__version__ = "0.1.0"
