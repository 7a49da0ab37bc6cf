"""Single-excitation transport on isotropic and dimerized rings with sink, dephasing and static disorder."""

__version__ = "0.1.0"
