"""Multi-label classification with classifier chain networks.

The package centers on a chained probabilistic network fitted jointly by
BFGS on an lq-aggregated penalized loss, together with binary relevance and
classifier chain baselines, synthetic data generators, evaluation metrics,
label-interdependency measures, and a batch CLI (``ccn``).
"""

from ._version import __version__
from .errors import (
    FactorizationError,
    FitError,
    GenerationError,
    InsufficientDataError,
    LinesearchError,
    OptimizerError,
    TuningError,
    ValidationError,
)
from .model import (
    ACTIVATIONS,
    IDENTITY,
    LOSS_KINDS,
    SIGMOID,
    Dataset,
    ForwardCache,
    LossSpec,
    ModelParams,
    forward,
    gradient,
    loss,
    loss_and_gradient,
    n_free_params,
    pack_params,
    per_label_loss,
    predict,
    unpack_params,
)
from .optimizer import MinimizeResult, OptimizerConfig, minimize, wolfe_linesearch
from .estimators import (
    FitConfig,
    FittedModel,
    entropy_label_order,
    fit_br,
    fit_cc,
    fit_ccn,
    informed_init,
    random_init,
)
from .metrics import (
    METRICS,
    hamming,
    macro_f1,
    micro_f1,
    nll,
    wilcoxon_signed_rank,
    zero_one,
)
from .numkit import (
    chi2_sf_1dof,
    cholesky,
    derive_seed,
    make_rng,
    mvn_sample,
    spawn_rng,
    sym_eig,
)
from .tuning import GridSpec, cv_grid_table, grid_search, kfold_split, select_best
from .simgen import (
    BUILTIN_DESIGNS,
    RandomDgpSpec,
    SimDesign,
    builtin_design,
    generate,
    latent_probability_curves,
    random_dgp,
)
from .dependency import (
    DependencyReport,
    ExperimentConfig,
    conditional_dependency,
    dependency_report,
    label_density,
    label_dependency,
    measure_validation_experiment,
    spearman,
    unconditional_dependency,
)
from .preprocess import FeatureTransform, apply_transform, fit_transform
from .bench import run_figure6, run_table1
