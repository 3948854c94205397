# queueing package
