from .multiproc import default_workers, parallelize
