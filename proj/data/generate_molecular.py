import numpy as np
from pyscf import gto, scf, ao2mo
import openfermion as of
from openfermion.transforms import symmetry_conserving_bravyi_kitaev

def mol_ham(geom, active=None, frozen=None):
    mol = gto.M(atom=geom, basis='sto-3g', verbose=0)
    mf = scf.RHF(mol).run()
    C = mf.mo_coeff
    h1 = C.T @ mf.get_hcore() @ C
    eri = ao2mo.restore(1, ao2mo.kernel(mol, C), C.shape[1])
    ecore = mol.energy_nuc()
    norb = C.shape[1]
    occ = frozen or []
    act = active or list(range(norb))
    # frozen core energy and effective one-body
    for i in occ:
        ecore += 2*h1[i,i]
        for j in occ:
            ecore += 2*eri[i,i,j,j] - eri[i,j,j,i]
    h1e = h1.copy()
    for p in act:
        for q in act:
            for i in occ:
                h1e[p,q] += 2*eri[p,q,i,i] - eri[p,i,i,q]
    h1a = h1e[np.ix_(act,act)]
    erif = eri[np.ix_(act,act,act,act)]
    n = len(act)
    # openfermion InteractionOperator uses physicist ordering: h2[p,q,r,s] a+p a+q a_r a_s
    one = np.zeros((2*n,2*n)); two = np.zeros((2*n,)*4)
    for p in range(n):
        for q in range(n):
            for s in range(2):
                one[2*p+s,2*q+s] = h1a[p,q]
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for t in range(n):
                    v = erif[p,t,q,r]  # (pt|qr) chemist -> <pq|rt>
                    for s1 in range(2):
                        for s2 in range(2):
                            two[2*p+s1,2*q+s2,2*r+s2,2*t+s1] = 0.5*v
    iop = of.InteractionOperator(ecore, one, two)
    return of.get_fermion_operator(iop), 2*n, mol.nelectron - 2*len(occ)

def dump(qop, nq, path, label):
    qop.compress(1e-12)
    lines = []
    for term, c in sorted(qop.terms.items()):
        w = ['I']*nq
        for q, p in term: w[q] = p
        assert abs(c.imag) < 1e-10
        lines.append(f"{c.real:.17g} {''.join(w)}")
    mat = of.get_sparse_operator(qop, n_qubits=nq).toarray()
    e0 = np.linalg.eigvalsh(mat)[0]
    with open(path,'w') as f:
        f.write(label)
        f.write(f"# dense ground energy of this file: {e0:.12f}\n")
        f.write("\n".join(lines)+"\n")
    print(path, e0, len(lines))

fop, nm, ne = mol_ham('H 0 0 0; H 0 0 0.735')
q = symmetry_conserving_bravyi_kitaev(fop, nm, ne)
dump(q, 2, 'h2_sto3g_0735.txt', "# H2 / STO-3G at 0.735 A, symmetry-conserving Bravyi-Kitaev, tapered to 2 qubits.\n# Externally generated input (PySCF + OpenFermion); illustrative benchmark data only.\n")
fop, nm, ne = mol_ham('Li 0 0 0; H 0 0 1.5', active=[1,2], frozen=[0])
q = symmetry_conserving_bravyi_kitaev(fop, nm, ne)
print(nm, ne)
fop, nm, ne = mol_ham('Li 0 0 0; H 0 0 1.5', active=[1,2,5], frozen=[0])
q = symmetry_conserving_bravyi_kitaev(fop, nm, ne)
dump(q, 4, 'lih_sto3g_15.txt', "# LiH / STO-3G at 1.5 A, frozen Li 1s core, active orbitals {1,2,5},\n# symmetry-conserving Bravyi-Kitaev, tapered to 4 qubits.\n# Externally generated input (PySCF + OpenFermion); illustrative benchmark data only.\n")
