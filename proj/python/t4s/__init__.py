from .t4s_py import T3, ConfigError, Model, load_model, parse_config, run, t3_svd, verify_tables

__all__ = ["T3", "ConfigError", "Model", "load_model", "parse_config", "run", "t3_svd", "verify_tables"]
