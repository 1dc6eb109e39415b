"""
Comparing conformer ensembles
=============================

RMSD after optimal superposition is the basic distance between two
conformations. COV counts the reference conformers that have some generated
conformer within delta, and MAT averages the distance from each reference
conformer to its closest generated one.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from confbias.metrics import coverage, kabsch_align, matching, pairwise_rmsd, rmsd
from confbias.synth import MoleculeTemplate, build_coordinates, gen_dataset

tmpl = MoleculeTemplate()
a = build_coordinates(tmpl, [180.0, 60.0, -60.0])

# A rotated, shifted copy is the same conformation.
R = Rotation.from_euler("xyz", [30, -70, 12], degrees=True).as_matrix()
print("RMSD to moved copy:", rmsd(a, a @ R.T + [4.0, -2.0, 1.0]))

# Its mirror image is not: the alignment only uses proper rotations.
mirror = a * [1, 1, -1]
R_fit, _ = kabsch_align(a, mirror)
print("RMSD to mirror image:", round(rmsd(a, mirror), 4), " det R =", round(np.linalg.det(R_fit), 6))

# %%
# Two independent draws of the same molecule, treated as generated and reference sets.
ref, gen = gen_dataset(tmpl, 2, 20, seed=5)
M = pairwise_rmsd(gen.conformers, ref.conformers)
print("matrix shape (reference x generated):", M.shape)
for delta in (0.25, 0.5, 1.0):
    print(f"COV at delta={delta}: {coverage(M, delta):.2f}")
print(f"MAT: {matching(M):.3f}")
