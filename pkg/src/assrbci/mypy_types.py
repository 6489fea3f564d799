"""
This module holds common type annotations.
"""
from typing import Dict, List, Optional, Union

import numpy as np
import numpy.typing as npt

LabelsType = Dict[str, Union[str, int, float, bool]]

# Sample containers. Audio and phase series are float64, stored EEG is float32.
FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
EegArray = npt.NDArray[np.float32]

CellValueType = Optional[float]
TableRowsType = List[List[CellValueType]]
