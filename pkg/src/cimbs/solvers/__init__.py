"""
Solvers for CIM-BS: optimizers over RR-set objectives, the end-to-end
pipeline, result reporting and the verification oracles.
"""
