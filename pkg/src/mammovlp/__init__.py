"""Multimodal contrastive pretraining and BI-RADS fine-tuning for mammography."""

__version__ = "0.1.0"
