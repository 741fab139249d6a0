from nlperspective.__version__ import version as __version__  # noqa
from nlperspective.extreal import NEG_INF, POS_INF, ExtReal  # noqa
from nlperspective.funcs import FuncHandle, FuncMeta, GridFunction, GridSpec, Norm, Point  # noqa
from nlperspective.envelopes import berhu, envelope_down, envelope_up, huber  # noqa
from nlperspective.perspective import (  # noqa
    Branch,
    OracleGrids,
    Perspective,
    perspective_eval,
    perspective_report,
    preperspective_conjugate_eval,
    preperspective_eval,
)
