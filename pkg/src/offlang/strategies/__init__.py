"""Transfer learning, self-ensembling (MSE/ASE), recipes and checkpoint files."""
from .checkpoint import (
    CheckpointError, checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint,
)
from .ensemble import (
    EnsembleModel, ase_aggregate, ase_label, load_ensemble, mse_aggregate, predict_ase,
    predict_mse, save_ensemble, train_ensemble,
)
from .recipe import (
    Recipe, RecipeData, RecipeError, RecipeSettings, run_recipe, train_source, transfer_init,
)
from ..encoder.model import Checkpoint
