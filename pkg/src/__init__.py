"""CIM-BS solver: continuous influence maximization with budget saving."""
