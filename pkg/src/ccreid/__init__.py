"""Cross-camera adaptation pipeline for vehicle re-identification.

Maps multi-camera training images into one common camera style with a
conditional translation GAN, trains an attention-alignment multi-branch
feature network on the unified images, and evaluates retrieval with CMC
and mAP.
"""

__version__ = "0.1.0"
