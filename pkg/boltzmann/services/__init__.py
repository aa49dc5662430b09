# Services package: the RBM numerics, free of Django imports
