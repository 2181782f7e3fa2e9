"""
Problem model for CIM-BS: graphs, diffusion, RR sets, strategies, budgets and
the RR-set objectives.
"""
