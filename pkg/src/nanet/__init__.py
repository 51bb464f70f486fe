"""Noise-adaptive Morse-code image classification.

A denoising autoencoder and a convolutional classifier trained jointly on
clean synthetic Morse images, with dataset generation, evaluation, heatmap
tooling, and a command-line pipeline. Everything runs on a from-scratch
reverse-mode autodiff tensor engine over numpy.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .dataset import (
    CONDITIONS,
    DatasetManifest,
    ImageBuffer,
    Jitter,
    NoiseSpec,
    RenderSpec,
    apply_noise,
    augment_rotate,
    build_dataset,
    default_noise_specs,
    read_png,
    render,
    resize,
    write_png,
)
from .errors import (
    ChecksumMismatch,
    DisconnectedGraph,
    EmptyMatrix,
    IoFailure,
    MissingSplit,
    NanetError,
    NonFiniteLoss,
    NonLetterInput,
    ShapeMismatch,
    SpecOverflow,
    UnknownCode,
    VersionMismatch,
)
from .evaluation import EvalReport, compute_metrics, evaluate, export_denoised, psnr
from .gradcam import grad_cam
from .losses import cross_entropy, mse_loss, total_loss
from .model import (
    AutoencoderConfig,
    ClassifierConfig,
    NanetParams,
    count_params,
    forward_autoencoder,
    forward_classifier,
    forward_nanet,
    init_params,
)
from .morse import LETTERS, MorseSequence, MorseSymbol, decode_sequence, encode_letter, letter_index
from .optim import AdamState, adam_step, zero_grads
from .tensor import Tensor, no_grad
from .training import PRESETS, TrainConfig, preset_config, train

__version__ = "0.1.0"
