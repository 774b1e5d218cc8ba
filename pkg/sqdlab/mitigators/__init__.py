from .default import default_mitigator, mitigator_for
from .postselect import NoMitigation, PostSelection, postselect
from .recovery import ConfigurationRecovery, OccupancyStats, occupancy_stats, recover
