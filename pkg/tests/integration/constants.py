import os

#: Seed passed to every command under test
TESTING_SEED = int(os.environ.get("TESTING_SEED", "7"))

#: Monte Carlo draws for extraction and prediction runs
TESTING_SAMPLES = int(os.environ.get("TESTING_SAMPLES", "2000"))

#: Trials per design for TLS simulations
TESTING_TRIALS = int(os.environ.get("TESTING_TRIALS", "2"))
