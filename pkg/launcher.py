"""
DuplexSched Launcher

Command-line front end: reads a config file and flags, runs one experiment
and writes <out>.csv, <out>.manifest.json and <out>_summary.txt.

Exit codes: 0 success, 2 usage error, 3 configuration error,
4 runtime error (scheduling, subset cap, convergence, numerical, output I/O).

Author: DuplexSched Project
"""

import argparse
import logging
import sys
from typing import List, Optional

import psutil

from modules import experiments
from modules.scheduler import EpsilonSchedule, epsilon_value
from utils.config import APP_NAME, APP_VERSION, ConfigManager
from utils.csv_logger import RunLogger, configure_logging
from utils.errors import ConfigError, DuplexSchedError

SUBCOMMANDS = {
    'gap-vs-n': "Rate gap to the isolated benchmarks as the user count grows",
    'antenna-scaling': "Per-stream rate with the antenna count growing like log n",
    'clustered-sweep': "Isolated capacity vs the full-duplex bound over an SNR sweep",
    'sidechannel-check': "Side-channel replication scheme vs isolated capacity",
    'candidate-prob': "Candidate-set membership frequencies vs closed forms",
    'extreme-value': "Tail probabilities of maxima of exponential and gamma variables",
    'single-trial': "Run and print one scheduling trial",
}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

# flag destination -> RunConfig key
FLAG_KEYS = {
    'seed': 'seed',
    'trial': 'trial',
    'trials': 'trials',
    'workers': 'workers',
    'out': 'out',
    'n': 'n',
    'm': 'M',
    'p': 'P',
    'pbar': 'P_bar',
    'epsilon_mode': 'epsilon_mode',
    'epsilon': 'epsilon',
    'model': 'model',
    'h': 'h',
    'g': 'g',
    'n_list': 'n_list',
    'delta': 'delta',
    'alpha': 'alpha',
    'beta': 'beta',
    'snr_list': 'snr_list',
    'm_list': 'm_list',
    'force_zero_g': 'force_zero_g',
    'draws': 'draws',
    'big_n': 'big_n',
    'ev_draws': 'ev_draws',
    'subset_cap': 'subset_cap',
    'dpc_tol': 'dpc_tol',
    'dpc_max_iters': 'dpc_max_iters',
}


def default_workers() -> int:
    """Physical core count, or 1 when it cannot be determined."""
    return psutil.cpu_count(logical=False) or 1


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per experiment; every subcommand takes every flag."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON or YAML config file (flags override it)')
    common.add_argument('--seed', help='Master seed (unsigned 64-bit)')
    common.add_argument('--trials', help='Monte Carlo trials per point')
    common.add_argument('--workers', help='Worker processes (default: physical cores)')
    common.add_argument('--out', help='Output prefix for .csv, .manifest.json and _summary.txt')

    network = common.add_argument_group('network')
    network.add_argument('--n', help='Number of users per link')
    network.add_argument('--m', help='Base-station antennas (streams)')
    network.add_argument('--p', help='Total downlink power P')
    network.add_argument('--pbar', help='Per-user uplink power P_bar')
    network.add_argument('--epsilon-mode', choices=['decaying', 'constant'], help='Threshold schedule')
    network.add_argument('--epsilon', help='c for c/ln(n), or the constant threshold')
    network.add_argument('--model', choices=['homogeneous', 'clustered'], help='Channel model')
    network.add_argument('--h', help='Clustered channel norm')
    network.add_argument('--g', help='Clustered interference magnitude')

    sweep = common.add_argument_group('experiment')
    sweep.add_argument('--n-list', help='Comma-separated user counts')
    sweep.add_argument('--delta', help='Gap level for the exceedance probability (nats)')
    sweep.add_argument('--alpha', help='Scaling or interference exponent')
    sweep.add_argument('--beta', help='Uplink SNR exponent')
    sweep.add_argument('--snr-list', help='Comma-separated SNR values')
    sweep.add_argument('--m-list', help='Comma-separated antenna counts')
    sweep.add_argument('--force-zero-g', action='store_const', const=True, default=None,
                       help='Remove interference in the clustered sweep')
    sweep.add_argument('--draws', help='Draws for the statistical checks')
    sweep.add_argument('--big-n', help='Variables per maximum in the extreme-value check')
    sweep.add_argument('--ev-draws', help='Maxima sampled per statistic in the extreme-value check')
    sweep.add_argument('--subset-cap', help='Largest exact MAC-M enumeration')
    sweep.add_argument('--dpc-tol', help='Waterfilling tolerance')
    sweep.add_argument('--dpc-max-iters', help='Waterfilling iteration budget')
    sweep.add_argument('--trial', help='Trial index for single-trial (default 0)')

    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='Debug logging')
    verbosity.add_argument('--quiet', action='store_true', help='Warnings and errors only')

    parser = argparse.ArgumentParser(
        prog='launcher.py',
        description=f"{APP_NAME} {APP_VERSION}: full-duplex opportunistic scheduling experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python launcher.py gap-vs-n --seed 7 --out runs/g1
  python launcher.py candidate-prob --m 3 --epsilon-mode constant --epsilon 0.5
  python launcher.py clustered-sweep --alpha 1 --beta 1 --m-list 1,2,4
  python launcher.py single-trial --n 16 --m 2 --p 10 --pbar 10 --seed 1
        """
    )
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    for name, help_text in SUBCOMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def resolve_config(args: argparse.Namespace) -> ConfigManager:
    """Config file first, then flags; validated."""
    overrides = {key: getattr(args, dest) for dest, key in FLAG_KEYS.items()}
    manager = ConfigManager(args.config, overrides)
    if args.workers is None and 'workers' not in manager.file_values:
        manager.update({'workers': default_workers()})
    manager.validate()
    return manager


def run_experiment(command: str, manager: ConfigManager) -> experiments.ExperimentTable:
    """Dispatch to the experiment named by the subcommand."""
    c = manager.config
    if command == 'gap-vs-n':
        return experiments.run_gap_vs_n(manager.network_config(), c.n_list, c.trials, c.delta,
                                        workers=c.workers, subset_cap=c.subset_cap,
                                        tol=c.dpc_tol, max_iters=c.dpc_max_iters)
    if command == 'antenna-scaling':
        return experiments.run_antenna_scaling(manager.network_config(), c.alpha, c.n_list,
                                               c.trials, workers=c.workers)
    if command == 'clustered-sweep':
        tables = [experiments.run_clustered_snr_sweep(c.alpha, c.beta, M, c.snr_list, c.force_zero_g)
                  for M in c.m_list]
        return experiments.concat_tables(tables)
    if command == 'sidechannel-check':
        return experiments.run_sidechannel_check(c.m_list, c.h, c.P, c.P_bar)
    if command == 'candidate-prob':
        eps = epsilon_value(EpsilonSchedule(mode=c.epsilon_mode, value=c.epsilon), c.n)
        return experiments.run_candidate_prob_check(c.M, eps, c.n, c.draws, c.seed)
    if command == 'extreme-value':
        return experiments.run_extreme_value_check(c.M, c.big_n, c.ev_draws, c.seed)
    raise ConfigError(f"unknown subcommand: {command}")


def print_trial(result: experiments.TrialResult):
    """Schedule, per-stream rates and gaps of one trial."""
    sched, report = result.schedule, result.report
    print(f"🔍 Single trial {result.trial} (n={result.config.n}, M={result.config.M}, "
          f"model={result.config.model}, epsilon={sched.epsilon_used:.6g})")
    print("=" * 50)
    print(f"   Uplink users T_bar:   {sched.uplink_users}  fallback {sched.uplink_fallback_flags}")
    print(f"   Downlink users T:     {sched.downlink_users}  fallback {sched.downlink_fallback_flags}")
    for m in range(result.config.M):
        print(f"   Stream {m}: uplink {report.uplink_stream_rates[m]:.6f} nats, "
              f"downlink {report.downlink_stream_rates[m]:.6f} nats")
    print(f"   Sum rate: uplink {report.uplink_sum:.6f}, downlink {report.downlink_sum:.6f}, "
          f"total {report.sum_rate:.6f} nats")
    if report.benchmarks is not None:
        mac, bc = report.benchmarks
        uplink_gap, downlink_gap = report.gaps
        print(f"   Benchmarks ({report.benchmark_mode}): uplink {mac:.6f}, downlink {bc:.6f} nats")
        print(f"   Gaps: uplink {uplink_gap:.6f}, downlink {downlink_gap:.6f}, "
              f"total {report.total_gap:.6f} nats")
    if 'fd_bound' in report.extras:
        status = "✅" if report.extras['within_fd_bound'] else "❌"
        print(f"   {status} Full-duplex upper bound: {report.extras['fd_bound']:.6f} nats")


def show_run_info(command: str, manager: ConfigManager):
    """Header with the resolved settings, printed before an experiment starts."""
    print(f"🔍 {APP_NAME} {APP_VERSION}: {command}")
    print("=" * 50)
    for key, value in manager.get_config_summary().items():
        print(f"   {key}: {value}")


def dispatch(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv, run the experiment and write its outputs.

    Args:
        argv (list, optional): Arguments without the program name

    Returns:
        int: Exit status
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    configure_logging(level)

    try:
        manager = resolve_config(args)
        if not args.quiet:
            show_run_info(args.command, manager)
        if args.command == 'single-trial':
            c = manager.config
            result = experiments.run_trial(manager.network_config(), c.trial, c.subset_cap,
                                           c.dpc_tol, c.dpc_max_iters)
            print_trial(result)
            table = experiments.trial_table(result) if args.out is not None else None
        else:
            table = run_experiment(args.command, manager)

        if table is not None:
            run_logger = RunLogger(manager.config.out, args.command)
            csv_path = run_logger.log_table(table)
            run_logger.log_run_end(manager.to_dict(), table.metadata, row_count=len(table))
            if not args.quiet and len(table) <= 20:
                print(table.rows.to_string(index=False))
            print(f"✅ Results written to {csv_path}")
    except ConfigError as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DuplexSchedError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"❌ Cannot write outputs: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main():
    """Main launcher function."""
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == '__main__':
    main()
