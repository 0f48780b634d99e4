from __future__ import annotations
import pprint

import numpy as np

from src.pathsig.recovery import RecoveryOptions, recover
from src.pathsig.signatures import sig_axis, sig_poly, sig_pwln_chen
from src.pathsig.tensor_algebra import CoefficientField, TensorAlgebraSpace

if __name__ == '__main__':
    T = TensorAlgebraSpace(2, 3, CoefficientField.RATIONAL)

    print("## axis path, T_{2,3}:")
    for level in sig_axis(T).levels:
        pprint.pprint(level.tolist())

    print("## polynomial path t -> (t + 2t^2, 3t + 4t^2):")
    for level in sig_poly(T, [[1, 2], [3, 4]]).levels:
        pprint.pprint(level.tolist())

    print("## recovering a 4-segment path from its level-4 signature:")
    A = np.array([[6, -2, 6, -10], [7, -4, 10, -4]], dtype=float)
    S = sig_pwln_chen(TensorAlgebraSpace(2, 4, CoefficientField.FLOAT64), A)
    noise = np.random.default_rng(1).standard_normal(A.shape)
    result = recover(S, 4, options=RecoveryOptions(initial_guess=A + 0.01 * noise, residual_tolerance=1e-8))
    pprint.pprint(result)
