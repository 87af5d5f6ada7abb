"""Sound-soft scattering in isotropic inhomogeneous media and near-cloak experiments."""
