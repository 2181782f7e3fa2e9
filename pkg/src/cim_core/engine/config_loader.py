"""
Configuration loader for the CIM-BS solver.

This module loads the solver defaults from solver-config.yaml and parses the
flat ``key = value`` run-config files used by the command line. The YAML file is
read once and cached, so repeated lookups are cheap and thread-safe.
"""

import logging
import math
import os
import threading
from typing import Any, Callable, Dict, List, Optional, Tuple

import yaml

from src.cim_core.errors import ConfigError

# Set up logger
logger = logging.getLogger(__name__)

# Path to the solver configuration file
CONFIG_PATH = os.path.join(
    os.path.dirname(os.path.dirname(os.path.dirname(os.path.dirname(__file__)))),
    "solver-config.yaml",
)

_config_lock = threading.RLock()

# Cache for the full configuration
_full_config: Optional[Dict[str, Any]] = None


def _to_float(raw: str) -> float:
    text = raw.strip().lower()
    if text in ("inf", "+inf", "infinity", ".inf"):
        return math.inf
    return float(text)


def _to_int(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(value)


def _choice(*allowed: str) -> Callable[[str], str]:
    def convert(raw: str) -> str:
        value = raw.strip()
        if value not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}; got {value!r}")
        return value
    return convert


ALGORITHM_KINDS = ("proxgrad_ris", "uppergrad_ris", "proxgrad_org", "greedy_ris")

# key -> (converter for one item, is_list)
KEY_SCHEMA: Dict[str, Tuple[Callable[[str], Any], bool]] = {
    "graph.path": (str, False),
    "graph.synthetic.kind": (_choice("erdos_renyi", "scale_free_like"), False),
    "graph.synthetic.n": (_to_int, False),
    "graph.synthetic.param": (_to_float, False),
    "graph.synthetic.seed": (_to_int, False),
    "graph.weights": (_choice("explicit", "weighted_cascade"), False),
    "scenario.kind": (_choice("personalized", "segment"), False),
    "scenario.d": (_to_int, False),
    "scenario.size_bounds": (_to_int, True),
    "cost.kind": (_choice("one_norm", "two_norm"), False),
    "budget.k": (_to_float, False),
    "budget.lambda": (_to_float, False),
    "algo.kind": (_choice(*ALGORITHM_KINDS), True),
    "algo.termination": (_choice("theory", "heuristic"), False),
    "algo.heu_threshold": (_to_float, False),
    "algo.greedy_step": (_to_float, False),
    "algo.resample": (_choice("reuse", "fresh"), False),
    "epsilon": (_to_float, False),
    "ell": (_to_float, False),
    "seed": (_to_int, False),
    "eval.sims": (_to_int, False),
    "eval.runs": (_to_int, False),
    "sweep.k": (_to_float, True),
    "sweep.lambda": (_to_float, True),
    "caps.theta": (_to_int, False),
    "caps.iterations": (_to_int, False),
    "caps.scenario_attempts": (_to_int, False),
    "mc.chunk_size": (_to_int, False),
    "org.iterations": (_to_int, False),
    "org.eval_sims": (_to_int, False),
}


def _load_full_config() -> None:
    """
    Load the full configuration from the solver-config.yaml file.

    Raises:
        ConfigError: If the configuration file is invalid.
    """
    global _full_config

    try:
        with open(CONFIG_PATH, "r") as f:
            config = yaml.safe_load(f)

        if not config or "defaults" not in config:
            raise ConfigError(f"Invalid configuration file: {CONFIG_PATH}")

        unknown = sorted(set(config["defaults"]) - set(KEY_SCHEMA))
        if unknown:
            raise ConfigError(f"Unknown keys in {CONFIG_PATH}: {', '.join(unknown)}")

        _full_config = config
        logger.info(f"Loaded solver configuration with {len(config['defaults'])} defaults "
                    f"and {len(config.get('oracles', []))} oracle entries")
    except Exception as e:
        logger.error(f"Error loading solver configuration: {str(e)}")
        raise


def load_defaults() -> Dict[str, Any]:
    """
    Return a copy of the default value for every run-config key.

    The YAML file is loaded on first use and cached afterwards.
    """
    with _config_lock:
        if _full_config is None:
            _load_full_config()
        defaults = dict(_full_config["defaults"])

    # YAML keeps lists as lists and scalars typed; normalise list-valued keys
    for key, (_, is_list) in KEY_SCHEMA.items():
        value = defaults.get(key)
        if is_list and value is not None and not isinstance(value, list):
            defaults[key] = [value]
    return defaults


def get_default_value(key: str) -> Any:
    """
    Get the default value of a single run-config key.

    Raises:
        KeyError: If the key is not part of the schema.
    """
    if key not in KEY_SCHEMA:
        raise KeyError(f"Key '{key}' is not a run-config key")
    return load_defaults().get(key)


def get_oracle_entries(enabled_only: bool = True) -> List[Dict[str, Any]]:
    """Return the oracle suite entries declared in solver-config.yaml."""
    with _config_lock:
        if _full_config is None:
            _load_full_config()
        entries = list(_full_config.get("oracles", []))

    if enabled_only:
        entries = [entry for entry in entries if entry.get("enabled", False)]
    logger.debug(f"Oracle entries: {[entry['name'] for entry in entries]}")
    return entries


def parse_run_config(text: str, source: str = "<string>") -> Dict[str, Any]:
    """
    Parse flat ``key = value`` run-config text.

    Lines starting with '#' and blank lines are ignored; list-valued keys take
    comma-separated values.

    Returns:
        Only the keys present in the text, converted to their schema types.

    Raises:
        ConfigError: On unknown keys, malformed lines or unconvertible values.
    """
    values: Dict[str, Any] = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_number}: expected 'key = value', got {line!r}")

        key, raw_value = (part.strip() for part in line.split("=", 1))
        if key not in KEY_SCHEMA:
            raise ConfigError(f"{source}:{line_number}: unknown key '{key}'")

        convert, is_list = KEY_SCHEMA[key]
        try:
            if is_list:
                items = [item.strip() for item in raw_value.split(",") if item.strip()]
                values[key] = [convert(item) for item in items]
            elif raw_value.lower() in ("", "none", "null"):
                values[key] = None
            else:
                values[key] = convert(raw_value)
        except ValueError as e:
            raise ConfigError(f"{source}:{line_number}: bad value for '{key}': {str(e)}") from e

    return values


def load_run_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Load a run-config file and merge it over the YAML defaults.

    Args:
        path: Path of the flat key=value file.
        overrides: Already-typed values that win over the file (command-line flags).

    Returns:
        A dictionary with a value for every schema key.

    Raises:
        ConfigError: If the file is missing or invalid.
    """
    if not os.path.exists(path):
        logger.error(f"Run configuration file not found: {path}")
        raise ConfigError(f"Run configuration file not found: {path}")

    with open(path, "r") as f:
        parsed = parse_run_config(f.read(), source=path)

    config = load_defaults()
    config.update(parsed)
    if overrides:
        config.update({key: value for key, value in overrides.items() if value is not None})

    logger.info(f"Loaded run configuration from {path} ({len(parsed)} keys set)")
    return config
