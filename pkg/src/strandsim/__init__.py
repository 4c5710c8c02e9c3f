"""Capacity planning for supercomputing powered by stranded renewable energy.

The package covers the full pipeline: market time series (ingest or
synthesize), stranded-power classification and duty-factor analytics,
availability schedules, batch workload synthesis, throughput simulation of
mixed always-on/intermittent systems, an annualized cost model, and
cost-performance study sweeps with extreme-scale projections.
"""

__version__ = "0.1.0"

from .availability import AvailabilitySchedule, periodic_schedule, schedule_from_series, sp_schedule
from .errors import (CalibrationError, ConfigError, InfeasibleError, ParseError,
                     StrandsimError, UndefinedValueError, ValidationError)
from .market import (Distribution, MarketSlot, SiteSeries, SynthMarketConfig,
                     calibrate_to_duty_factor, export_csv, ingest_csv,
                     synthesize_market)
from .scenarios import (GenerationPoint, StudySpace, calibrated_market_series,
                        default_study_space, extreme_tco,
                        extreme_throughput_cost_eff, parse_model_label,
                        peak_pflops_per_budget, project_generations,
                        reference_market_config, run_sweep)
from .simulator import Pool, SimResult, SystemConfig, simulate, throughput_curve
from .stranded import (SpInterval, SpModel, SpReport, avg_stranded_power,
                       build_report, cumulative_duty_factor, detect_intervals,
                       duty_factor, interval_histogram, net_price, rank_sites,
                       storage_to_bridge)
from .tco import (AmortizationInput, CostParams, TcoReport, amortize,
                  baseline_capital_inputs, cost_performance, load_params,
                  tco_mixed, tco_stranded, tco_traditional)
from .workload import (Job, SynthWorkloadConfig, WorkloadStats, WorkloadTrace,
                       load_trace, reference_workload_config, save_trace,
                       scale_job_size, scale_workload, synthesize_workload)
