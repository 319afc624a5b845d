"""Offensive-language identification for code-mixed text.

Bag-of-words baselines, a small trainable transformer encoder with a [CLS]
softmax classifier, cross-lingual transfer, self-ensembling and
masked-LM adaptation, plus evaluation reports.
"""
from .corpus import Document, Label, LabeledDataset, load_tsv, stratified_split, synth_codeswitch
from .metrics import EvalReport, evaluate, render_report

__version__ = "0.1.0"
