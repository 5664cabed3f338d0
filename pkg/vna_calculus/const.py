"""Constants for the vna calculator."""

PACKAGE = "vna_calculus"

# Option keys
CONF_DEPTH = "depth"
CONF_TRUNCATE = "truncate"
CONF_FORMAT = "format"

# Defaults
DEFAULT_DEPTH = 8  # chain depth budget
MIN_DEPTH = 1
MAX_DEPTH = 16
DEFAULT_TRUNCATE = 9  # terms kept from a declared countable family
MAX_TRUNCATE = 64
DEFAULT_FORMAT = "text"
OUTPUT_FORMATS = ("text", "json")

# Exit codes
EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_STABLE = 2

# Engine rules recorded in lineage
RULE_M2 = "m2"
RULE_GLUE = "glue"
RULE_CORNER = "corner"
RULE_SPLIT = "split"
RULE_COMPLETE = "complete"
RULE_PEEL = "peel"
RULE_CLOSED_FORM = "closed-form"

# Embedding flags for FreeFactor growth steps
EMBED_STANDARD = "standard"
EMBED_SUBSTANDARD = "substandard"
EMBED_CREATED = "created"

# Closed-form shapes
SHAPE_DIFFUSE_DIFFUSE = "diffuse-diffuse"
SHAPE_FREE_FREE = "free-free"
SHAPE_FREE_HYPERFINITE = "free-hyperfinite"
SHAPE_FREE_GENERAL = "free-general"

# Convergence statuses
STATUS_EXACT = "exact"
STATUS_STABLE = "stable"
STATUS_BOUNDS_ONLY = "bounds-only"

# Additivity check outcomes
CHECK_MATCH = "match"
CHECK_MISMATCH = "mismatch"
CHECK_NOT_APPLICABLE = "not-applicable"

# Sample points for classifying the tail of a repeat template
TAIL_SAMPLE_LOW = 64
TAIL_SAMPLE_HIGH = 128

DEMO_NAMES = ("pi26", "undef-rdim", "rr", "ff", "finf")
