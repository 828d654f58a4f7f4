"""Front end for a small annotated parallel language."""

from .interp import (ABORT, RACE, ExploreReport, Machine, ParState, as_idf, explore,
                     initial_states, interp_step, satisfies)
from .lang import (FIELD, Branch, PAlloc, PAssert, PAssign, PFree, PIf, PMethod, PPar, PSeq,
                   PSkip, PStmt, PStore, PWhile, free_vars_parimp, mod_vars_parimp, pseq)
from .parse import PimParser, parse_pim, parse_pstmt
from .translate import (FrontendError, TranslationResult, annotation_space, check_self_framing,
                        translate, translate_method, translate_program)
