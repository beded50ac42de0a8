import logging

hypothesis = {
    # hypothesis class settings
    # -------------------------

    # powerset_cap: largest d accepted by the powerset family
    # the class has 2^d rows, so 12 is already 4096 hypotheses
    # make sure there's no quotes around it
    'powerset_cap': 12,

    # max_hypotheses: refuse to build any class bigger than this
    # every dimension query is exponential in the worst case
    'max_hypotheses': 4096,
}

dimensions = {
    # dimension computation settings
    # ------------------------------

    # oracle_max_instances / oracle_max_hypotheses: limits for the
    # brute-force tree enumeration oracle. it enumerates every instance
    # assignment of a fixed tree shape, so keep these tiny
    'oracle_max_instances': 4,
    'oracle_max_hypotheses': 8,
}

learners = {
    # learner settings
    # ----------------

    # expert_cap: maximum number of experts the agnostic learner may enumerate
    # the count is sum_{k <= ldim} C(T, k), which blows up quickly with T
    'expert_cap': 200000,

    # weight_tolerance: how far the exp4.at weight vector may drift from
    # summing to one before it's treated as a bug
    'weight_tolerance': 1e-9,
}

adversary = {
    # lower-bound adversary settings
    # ------------------------------

    # num_sims: monte carlo replays per planning step
    # each step thresholds an estimated probability at 1/2
    'num_sims': 200,

    # eval_seeds: fresh learner seeds used to evaluate a planned stream
    'eval_seeds': 2000,

    # slack_delta: deviation used for the estimation slack d*exp(-2*num_sims*delta^2)
    # that's reported next to the d/4 floor
    'slack_delta': 0.1,

    # greedy_lookahead: rounds the greedy adversary looks ahead when
    # choosing the next labeled instance against a deterministic learner
    'greedy_lookahead': 1,
}

experiments = {
    # experiment runner settings
    # --------------------------

    # out_dir: where artifacts go, one subdirectory per command
    'out_dir': 'results',

    # jobs: worker processes for monte carlo replays
    # 1 runs everything in-process
    'jobs': 1,

    # seed: base seed if none is given on the command line
    'seed': 0,

    # regime_bands: fitted log-log exponent bands for the trichotomy table
    # anything outside every band is reported as indeterminate
    'regime_bands': {
        'constant': (float('-inf'), 0.15),
        'sqrt': (0.35, 0.65),
        'linear': (0.85, float('inf')),
    },
}

acceptance = {
    # acceptance suite scale
    # ----------------------
    # these default to the full published scale. lower them for quick runs

    # random classes for the dimension oracle sweep
    'random_classes': 200,

    # small classes for the exhaustive constrained_soa / det_w1 sweeps
    'exhaustive_classes': 20,
    'exhaustive_horizon': 6,

    # monte carlo seeds for the conversion bound
    'conversion_seeds': 10000,

    # samples for the importance-weight unbiasedness check
    'estimator_samples': 100000,

    # seeds per label sequence for the exp4.at regret check
    'exp4_seeds': 200,

    # seeds / label sequences for the agnostic learner check
    'agnostic_seeds': 500,
    'agnostic_sequences': 100,

    # evaluation seeds for the lower-bound adversary
    'adversary_eval_seeds': 2000,

    # firewall / determinism trials
    'firewall_trials': 100,
}

log = {
    # logging settings
    # ----------------
    # logging_dir: a filepath or None to go to stdout
    # this should be something like '/var/log/pyapple'
    # it'll automatically split the logfiles per command
    'logging_dir': None,

    # logging.x where DEBUG, INFO, WARNING, ERROR, etc
    # generally, debug if something goes wrong, info for normal usage
    'logging_level': logging.INFO,

    # max_log_size: maximum size of logfiles before they get rotated
    # number, in bytes (this is 50mb)
    'max_log_size': 50 * 1024 * 1024,

    # enable/disable color logging to console
    'colors': True,
}
