from typing import Union

from ..constants import Mitigation
from ..mitigator import Mitigator
from .postselect import NoMitigation, PostSelection
from .recovery import ConfigurationRecovery


def default_mitigator(seed=None) -> Mitigator:
    return ConfigurationRecovery(seed=seed)


def mitigator_for(mode: Union[Mitigation, str], seed=None) -> Mitigator:
    """
    The mitigator behind a ``--mitigation`` mode string.
    """
    mode = Mitigation(mode)
    if mode is Mitigation.NONE:
        return NoMitigation()
    if mode is Mitigation.POSTSELECT:
        return PostSelection()
    return default_mitigator(seed)
