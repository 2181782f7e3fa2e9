"""Continuous influence maximization with budget saving (CIM-BS)."""
