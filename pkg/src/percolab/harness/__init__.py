from .config import ExperimentConfig, load_config
from .records import ReplicationRecord, emit_csv, emit_summary_json, parse_csv
from .runner import (CalibrationRow, LadderResult, OracleMismatch, calibrate_theta, replicate,
                     run_experiment, run_ladder)
