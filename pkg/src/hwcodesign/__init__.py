"""NN/accelerator co-design over a sparsely valid accelerator space."""

__version__ = "0.1.0"
