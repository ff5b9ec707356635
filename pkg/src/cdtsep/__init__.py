"""Two-talker time-domain source separation at desk scale.

Synthesizes monaural or binaural two-voice mixtures, trains a dense
sigmoidal autoencoder on overlapping time-domain windows, separates
mixtures by probabilistic re-synthesis (averaging many randomly perturbed
forward passes per frame), and scores the results with SDR/SIR/SAR
projection metrics.
"""

from .audio_io import (
    AudioBuffer,
    NormalizationParams,
    decimate,
    denormalize,
    normalize_unit,
    read_wav,
    write_wav,
)
from .framing import (
    FrameSet,
    TrainingSet,
    build_training_set,
    extract_frames,
    overlap_add_average,
    remove_dc,
)
from .metrics import (
    BssDecomposition,
    SeparationMetrics,
    bss_eval,
    decompose_projection,
    spectrogram,
)
from .mlp import (
    Mlp,
    TrainConfig,
    backprop,
    forward,
    init_mlp,
    load_mlp,
    save_mlp,
    train_sgd,
)
from .resynth import (
    ResynthesisConfig,
    SeparatedFrames,
    cdt_frame,
    invariant_correction,
    perturb_frame,
    separate_signal,
    separate_signal_sweep,
)
from .scene import (
    HrirPair,
    MixtureScene,
    equalize_rms,
    load_hrir_pair,
    mix_monaural,
    monaural_scene,
    spatialize_and_mix,
    synth_hrir,
)

__version__ = "0.1.0"
