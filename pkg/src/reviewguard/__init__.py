"""Opinion-spam detection toolkit: corpus ingestion, preprocessing,
active-learning labeling, n-gram/TF-IDF and word2vec features, classic and
neural classifiers, an evaluation harness, and an expert-labeling service."""

__version__ = "0.1.0"
