#!/usr/bin/env python
# file simulate.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Run the localization experiments.

Writes the CSV files of an experiment and a run manifest in the output
directory.
"""

import os
import sys
import json
import logging
import argparse
from dataclasses import replace
from pathlib import Path

import nfloc.experiments as ex
import nfloc.io as io

log = logging.getLogger(__name__)

EXPERIMENTS = {
    'heatmap': ('heatmap.csv', 'heatmap_meta.json'),
    'rmse-vs-snr': ('rmse_vs_snr.csv',),
    'convergence': ('convergence.csv',),
    'rmse-vs-nt': ('rmse_vs_nt.csv',),
    'rmse-vs-m': ('rmse_vs_m.csv',),
    'trackmap': ('trackmap.csv',),
    'selftest': ('selftest.csv',),
}
MANIFEST = 'manifest.json'
CONFIG = 'scenario.cfg'

def build_parser():
    parser = argparse.ArgumentParser(description='Near-field wideband localization experiments.',
                                     formatter_class=argparse.RawDescriptionHelpFormatter,
                                     epilog="""
The config file holds 'key = value' lines, missing keys take the default
values. See the following `scenario.cfg` example file:

# 300 GHz, 30 GHz bandwidth, 12 subcarriers
f_c = 300e9
bandwidth = 30e9
m = 12
n = 256
n_d = 8
n_t = 16
users = 8:pi/3, 8:pi/4
snr_db = -10, -5, 0
schemes = random, ps_only, optimal, alternating

The environment variable NFLOC_SEED overrides --seed.
""")
    parser.add_argument('-c', '--config', type=str, help='scenario configuration file')
    parser.add_argument('-o', '--out', type=str, default='results', help='output directory')
    parser.add_argument('-s', '--seed', type=int, help='master seed of the run')
    parser.add_argument('-t', '--trials', type=int, help='Monte Carlo trials per sweep point')
    parser.add_argument('-j', '--jobs', type=int, default=os.cpu_count() or 1, help='number of worker processes')
    parser.add_argument('-e', '--experiment', type=str, required=True, choices=list(EXPERIMENTS),
                        help='experiment to run')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='increase verbosity')
    return parser

def _resolve_seed(args, config):
    env = os.environ.get('NFLOC_SEED')
    if env is not None:
        try:
            return int(env)
        except ValueError:
            msg = 'Invalid NFLOC_SEED \'{}\'.'.format(env)
            log.error(msg)
            raise ValueError(msg)
    return config.seed if args.seed is None else args.seed

def run_experiment(name, config, out_dir, jobs=1, progress=True):
    """Run an experiment and write its files in `out_dir`.

    Returns
    -------
    outputs : list of Path
        Written files.
    """
    files = [out_dir / f for f in EXPERIMENTS[name]]
    cfg = config.run_config(jobs, progress)
    schemes = config.schemes_list()

    if name == 'heatmap':
        xmin, ymin, xmax, ymax = config.heatmap_area
        res = ex.run_heatmap(config.scenario(config.heatmap_snr_db), config.focal,
                             ((xmin, ymin), (xmax, ymax)), config.heatmap_resolution,
                             config.heatmap_snr_db, cfg)
        io.write_csv(files[0], ('x_m', 'y_m', 'crb_m'), res.rows)
        files[1].write_text(json.dumps(res.metadata(), indent=1) + '\n')
    elif name == 'rmse-vs-snr':
        io.dump_result(files[0], ex.run_rmse_vs_snr(config.scenario(), schemes, config.snr_db, cfg))
    elif name == 'convergence':
        scenario = config.scenario(config.convergence_snr_db)
        io.dump_result(files[0], ex.run_convergence(scenario, config.convergence_priors, cfg))
    elif name == 'rmse-vs-nt':
        scenario = config.scenario(config.nt_snr_db)
        io.dump_result(files[0], ex.run_rmse_vs_nt(scenario, config.nt_list, schemes, cfg))
    elif name == 'rmse-vs-m':
        io.dump_result(files[0], ex.run_rmse_vs_m(config.scenario(), config.m_list, config.m_snr_db, schemes, cfg))
    elif name == 'trackmap':
        io.dump_result(files[0], ex.run_trackmap(config.scenario(config.trackmap_snr_db), cfg=cfg))
    elif name == 'selftest':
        checks = ex.selftest(config.seed)
        io.write_csv(files[0], ('check', 'passed', 'detail'), checks)
        failed = [c[0] for c in checks if not c[1]]
        if failed:
            msg = 'Selftest failed: {}.'.format(', '.join(failed))
            log.error(msg)
            raise RuntimeError(msg)
    return files

def main(argv=None):
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s')

    out_dir = Path(args.out)
    planned = [out_dir / f for f in EXPERIMENTS[args.experiment] + (MANIFEST, CONFIG)]
    try:
        config = io.parse_config(args.config) if args.config else io.ScenarioConfig().validate()
        seed = _resolve_seed(args, config)
        config = replace(config, seed=seed)
        if args.trials is not None:
            config = replace(config, trials=args.trials)
        config.validate()
        if args.jobs < 1:
            msg = 'At least one job is required, --jobs = {}.'.format(args.jobs)
            log.error(msg)
            raise ValueError(msg)

        out_dir.mkdir(parents=True, exist_ok=True)
        log.info('Running {} with seed {} in \'{}\'.'.format(args.experiment, seed, out_dir))
        outputs = run_experiment(args.experiment, config, out_dir, args.jobs)
        (out_dir / CONFIG).write_text(io.dump_config(config))
        io.write_manifest(out_dir / MANIFEST, config, args.experiment, seed, outputs + [out_dir / CONFIG])
    except Exception as e:
        print('nfloc: error: {}'.format(e), file=sys.stderr)
        for f in planned:
            if f.is_file():
                f.unlink()
                log.info('Removed partial output \'{}\'.'.format(f))
        return 1

    return 0

if __name__ == '__main__':
    sys.exit(main())
