"""
Algebra module: tailored matrix coordinates, the split Eichler order and
its partial duals, conjugation, Atkin-Lehner reduction and heights.
"""
