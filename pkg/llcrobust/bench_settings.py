# Random model generation
EDGE_PROB = 0.3
CONF_PROB = 0.3
EDGE_WEIGHT_RANGE = (0.2, 0.7)
NOISE_VARIANCE_RANGE = (1.5, 3.5)
CONFOUNDER_CORR_RANGE = (0.3, 0.8)
PSD_CLIP = 1e-6
MAX_SPECTRAL_RADIUS = 0.95
MAX_GENERATION_ATTEMPTS = 1000

# Numerical tolerances
DET_TOL = 1e-10
COND_LIMIT = 1e12
PSD_EIG_TOL = 1e-10
PINV_RCOND = 1e-10
BLOCK_COND_FLAG = 1e8

# Contamination outlier law: N(OUTLIER_LOCATION * 1, OUTLIER_SCALE**2 * I)
OUTLIER_LOCATION = 50.0
OUTLIER_SCALE = 0.1

# Covariance back ends
MCD_ALPHA = 0.5
MCD_N_STARTS = 50
MCD_MAX_CSTEPS = 30
MCD_KEEP_BEST = 10
MCD_EXHAUSTIVE_LIMIT = 100_000
MCD_REWEIGHT_QUANTILE = 0.975
GDE_GAMMA = 0.3
GDE_TOL = 1e-8
GDE_MAX_ITER = 500

# Benchmark (five nodes, 200 models, 200 points per experiment)
N_MODELS = 200
N_NODES = 5
SAMPLE_SIZE = 200
EPSILONS = (0.0, 0.05, 0.1, 0.2, 0.3)
MASTER_SEED = 2024
# subset fraction of the benchmark MCD (MCD_ALPHA is the fit default)
BENCH_MCD_ALPHA = 0.85
REFERENCE_RFE = 1.0
