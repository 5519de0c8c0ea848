"""Multi-view dynamic representation and ensemble selection engine.

Per-instance hardness (kDN) is computed for every feature view; at query
time the easiest view is selected from estimated hardness and a dynamic
ensemble selector (KNORA-E, DES-P, or a meta-learned competence model)
picks the locally competent classifiers in that view, combined by majority
vote. Ships static stacked baselines, oracle upper bounds, and a
reproducible cross-validation harness.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .data import (DataFormatError, MultiViewDataset, SplitPlan, ViewMatrix,
                   assemble_dataset, load_dataset, load_view, make_splits,
                   read_dmat, write_dmat)
from .hardness import (HardnessMatrix, build_hardness_matrix, compute_kdn,
                       estimate_test_hardness, hardness_statistics, select_view)
from .classifiers import (ClassifierGrid, ClassifierSpec, TrainedClassifier,
                          default_specs, fit, fit_grid)
from .selection import (FoldState, build_fold_state, build_roc, des_p,
                        dres_predict, knora_e, majority_vote, meta_des_select,
                        meta_des_train)
from .baselines import build_group, fit_stacked, oracle_full, oracle_representation
from .harness import (ExperimentConfig, compute_macro_f1, run_experiment,
                      selection_frequencies, sweep_k)
