"""Generate the FCIDUMP fixtures shipped in ../fixtures.

Requires pyscf. Each fixture gets a sidecar JSON with reference energies
(RHF, FCI and, where an active space is natural, CASCI) computed by pyscf,
used by the Rust test suite as an external cross-check.
"""
import json
import os

import numpy as np
from pyscf import ao2mo, fci, gto, mcscf, scf
from pyscf.tools import fcidump

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")
BOHR = 0.52917721092


def h2o_geometry(r):
    # equilibrium-like H2O; one O-H bond stretched to r (Angstrom)
    theta = np.deg2rad(104.0)
    r_eq = 0.96
    return [
        ("O", (0.0, 0.0, 0.0)),
        ("H", (r_eq, 0.0, 0.0)),
        ("H", (r * np.cos(theta), r * np.sin(theta), 0.0)),
    ]


def h4_geometry(r_bohr):
    return [("H", (0.0, 0.0, i * r_bohr * BOHR)) for i in range(4)]


def emit(name, mol, n_mo=None, cas=None):
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.max_cycle = 200
    e_rhf = mf.kernel()
    assert mf.converged, name
    mo = mf.mo_coeff if n_mo is None else mf.mo_coeff[:, :n_mo]
    norb = mo.shape[1]
    h1 = mo.T @ mf.get_hcore() @ mo
    eri = ao2mo.restore(1, ao2mo.kernel(mol, mo), norb)
    e_nuc = mol.energy_nuc()
    nelec = mol.nelectron
    path = os.path.join(OUT, name + ".fcidump")
    fcidump.from_integrals(path, h1, eri, norb, nelec, e_nuc, ms=0, tol=1e-14)
    e_fci, _ = fci.direct_spin1.kernel(
        h1, eri, norb, (nelec // 2, nelec // 2), ecore=e_nuc, conv_tol=1e-13, max_cycle=400
    )
    record = {"norb": norb, "nelec": nelec, "e_rhf": e_rhf, "e_fci": e_fci}
    if cas is not None:
        ncas, nelecas = cas
        ncore = (nelec - nelecas) // 2
        mc = mcscf.CASCI(mf, ncas, nelecas)
        mc.mo_coeff = mf.mo_coeff
        mc.fcisolver.conv_tol = 1e-13
        e_casci = mc.kernel()[0]
        record["casci"] = {"n_core": ncore, "n_active": ncas, "n_active_electrons": nelecas, "e_casci": e_casci}
    with open(os.path.join(OUT, name + ".json"), "w") as f:
        json.dump(record, f, indent=2)
    print(name, record)


def main():
    os.makedirs(OUT, exist_ok=True)
    emit("h2_sto3g_r1.4", gto.M(atom=[("H", (0, 0, 0)), ("H", (0, 0, 1.4 * BOHR))], basis="sto-3g", verbose=0))
    emit("h4_sto3g_r2.0", gto.M(atom=h4_geometry(2.0), basis="sto-3g", verbose=0), cas=(4, 4))
    for r in (2.0, 3.0, 4.0):
        emit(f"h4_vdz8_r{r:.1f}", gto.M(atom=h4_geometry(r), basis="cc-pvdz", verbose=0), n_mo=8, cas=(4, 4))
    for r in (1.0, 2.0):
        emit(f"h2o_sto3g_r{r:.1f}", gto.M(atom=h2o_geometry(r), basis="sto-3g", verbose=0), cas=(2, 2))


if __name__ == "__main__":
    main()
