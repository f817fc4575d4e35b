"""epsilite: a small model-management workbench."""
