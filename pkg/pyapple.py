#!/usr/bin/python3
"""pyapple, an apple-tasting online learning lab

Usage:
    pyapple.py (dims|play|bench|adversary|experts|trichotomy) [options]
    pyapple.py checkconfig

Options:
    -h --help           Show this screen.
    --version           Show version.
    --config=<json>     Experiment config (JSON file). Flags below override it.
    --seed=<n>          Base seed.
    --out-dir=<dir>     Where artifacts go, one subdirectory per command.
    --jobs=<n>          Worker processes for monte carlo replays.
    --class=<json>      Hypothesis class as a JSON file or inline JSON.
    --learner=<json>    Learner spec: a kind name, a JSON file or inline JSON.
    --stream=<json>     Stream: a JSON file, inline rounds or a generator spec.
    --mode=<mode>       Feedback mode, apple or full.
    --width=<w>         dims: widest AL_w to report. adversary: tree width.
    --witness           Include a witness tree in the dims report.
    --horizon=<T>       Horizon.
    --horizons=<list>   Comma-separated horizons for trichotomy.
    --seeds=<n>         Number of monte carlo seeds.
    --sims=<n>          Monte carlo replays per adversary planning step.
    --eval-seeds=<n>    Evaluation seeds for the adversary.

"""

import traceback

from docopt import docopt

import pyapple
from pyapple import log, log_init
from pyapple.experiments import ExperimentConfig, run_command, exit_code_for, COMMANDS, EXIT_OK, EXIT_CONFIG


def _int(value):
    return int(value) if value is not None else None


def overrides(arguments):
    horizons = arguments['--horizons']
    return {
        'seed': _int(arguments['--seed']),
        'out_dir': arguments['--out-dir'],
        'jobs': _int(arguments['--jobs']),
        'class': arguments['--class'],
        'learner': arguments['--learner'],
        'stream': arguments['--stream'],
        'mode': arguments['--mode'],
        'width': _int(arguments['--width']),
        'witness': True if arguments['--witness'] else None,
        'horizon': _int(arguments['--horizon']),
        'horizons': [int(t) for t in horizons.split(',')] if horizons else None,
        'seeds': _int(arguments['--seeds']),
        'sims': _int(arguments['--sims']),
        'eval_seeds': _int(arguments['--eval-seeds']),
    }


def checkconfig():
    from pyapple import check_config

    if not check_config():
        return EXIT_CONFIG
    print('Config appears ok!')
    return EXIT_OK


def main(arguments):
    if arguments['checkconfig']:
        return checkconfig()

    command = next(c for c in COMMANDS if arguments[c])
    log_init(command)

    try:
        flags = overrides(arguments)
    except ValueError as e:
        log.error('{}: bad numeric option: {}'.format(command, e))
        return EXIT_CONFIG

    try:
        experiment = ExperimentConfig.from_file(arguments['--config']) if arguments['--config'] else ExperimentConfig()
        run_command(command, experiment.with_overrides(flags))
    except Exception as e:
        log.error('{}: {}'.format(command, e))
        log.debug(traceback.format_exc())
        return exit_code_for(e)

    return EXIT_OK


if __name__ == '__main__':
    arguments = docopt(__doc__, version=pyapple.__version__)
    exit(main(arguments))
