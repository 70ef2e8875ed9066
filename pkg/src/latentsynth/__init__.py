"""latentsynth: loudness-invariant latent audio spaces.

A continuous frame VAE with adversarial loudness removal, a vector-quantized
model whose codebook is mapped with acoustic descriptors, and the synthesis
operators (interpolation, descriptor targets, codebook traversal) built on
top of them. Served over HTTP and driven from a thin CLI.
"""

__version__ = "0.1.0"
