"""From-scratch transformer encoder: [CLS] classifier, MLM pretraining, grad check."""
from .gradcheck import TINY, grad_check, grad_errors
from .model import (
    Checkpoint, ClassifierHead, EncoderConfig, EncoderOutput, EncoderWeights, ShapeError,
    classify_loss, encode_forward, forward, head_logits, init_encoder, init_head, mlm_loss,
    param_shapes, predict_proba, softmax,
)
from .train import (
    Adam, NumericalError, TrainHyper, VocabularyMismatch, mask_tokens, mlm_pretrain,
    train_classifier,
)
