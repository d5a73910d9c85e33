"""Node classification on attributed graphs via spectral latent embeddings."""

__version__ = "0.1.0"
