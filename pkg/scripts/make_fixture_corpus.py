#!/usr/bin/env python3
"""Generate the committed test fixture corpus (store TSV + test-split TSV).

Run from the repository root:

    python3 scripts/make_fixture_corpus.py

Regenerate only when the fixture design changes; the outputs are committed.
"""

from pathlib import Path

ALKANE_NAMES = {
    1: "methane", 2: "ethane", 3: "propane", 4: "butane", 5: "pentane",
    6: "hexane", 7: "heptane", 8: "octane", 9: "nonane", 10: "decane",
    11: "undecane", 12: "dodecane", 13: "tridecane", 14: "tetradecane",
    15: "pentadecane", 16: "hexadecane", 17: "heptadecane", 18: "octadecane",
    19: "nonadecane", 20: "icosane",
}

ACID_NAMES = {
    1: "formic acid", 2: "acetic acid", 3: "propanoic acid", 4: "butanoic acid",
    5: "pentanoic acid", 6: "hexanoic acid", 7: "heptanoic acid",
    8: "octanoic acid", 9: "nonanoic acid", 10: "decanoic acid",
}

HAND_ROWS = [
    ("c1ccccc1", "The molecule is benzene, the archetypal aromatic hydrocarbon with a six-membered ring. It has a role as a non-polar solvent and an industrial feedstock."),
    ("Cc1ccccc1", "The molecule is toluene, a methylbenzene. It is widely used as a solvent and an octane booster."),
    ("Oc1ccccc1", "The molecule is phenol, a hydroxybenzene bearing a single hydroxy substituent. It has a role as a disinfectant."),
    ("Nc1ccccc1", "The molecule is aniline, an aminobenzene and the parent of the anilide family of dyes."),
    ("Cc1ccc(O)cc1", "The molecule is 4-methylphenol, a cresol carrying a methyl group para to the hydroxy group. It has a role as a wood preservative."),
    ("Cc1cccc(O)c1", "The molecule is 3-methylphenol, a cresol carrying a methyl group meta to the hydroxy group."),
    ("c1ccc2ccccc2c1", "The molecule is naphthalene, a fused bicyclic aromatic hydrocarbon found in mothballs."),
    ("c1ccc2cc3ccccc3cc2c1", "The molecule is anthracene, a linear tricyclic aromatic hydrocarbon used in dye manufacture."),
    ("c1ccncc1", "The molecule is pyridine, an azine in which one ring carbon of benzene is replaced by nitrogen. It has a role as a base and a solvent."),
    ("c1cc[nH]c1", "The molecule is 1H-pyrrole, a five-membered aromatic ring with one NH group."),
    ("C1=CC=CO1", "The molecule is furan, a five-membered oxygen heterocycle written in its localized double-bond form."),
    ("c1cscc1", "The molecule is thiophene, a five-membered sulfur-containing aromatic heterocycle."),
    ("c1cnc[nH]1", "The molecule is 1H-imidazole, a 1,3-diazole with two ring nitrogens."),
    ("CN1C=NC2=C1C(=O)N(C(=O)N2C)C", "The molecule is caffeine, a trimethylxanthine alkaloid. It has a role as a central nervous system stimulant and an adenosine receptor antagonist."),
    ("CC(=O)Oc1ccccc1C(=O)O", "The molecule is acetylsalicylic acid, a 2-acetoxybenzoic acid. It has a role as an analgesic, an antipyretic and a platelet aggregation inhibitor."),
    ("CC(=O)Nc1ccc(O)cc1", "The molecule is paracetamol, an N-(4-hydroxyphenyl)acetamide. It has a role as an analgesic and an antipyretic."),
    ("CC(C)Cc1ccc(cc1)C(C)C(=O)O", "The molecule is ibuprofen, a 2-(4-isobutylphenyl)propanoic acid. It has a role as a non-steroidal anti-inflammatory drug."),
    ("OC(=O)c1ccccc1O", "The molecule is salicylic acid, a 2-hydroxybenzoic acid. It has a role as a keratolytic agent and a plant hormone."),
    ("OC(=O)c1ccccc1", "The molecule is benzoic acid, the simplest aromatic carboxylic acid. It has a role as a food preservative."),
    ("O=Cc1ccccc1", "The molecule is benzaldehyde, the simplest aromatic aldehyde, with an almond-like odour."),
    ("COc1cc(C=O)ccc1O", "The molecule is vanillin, a 4-hydroxy-3-methoxybenzaldehyde. It has a role as a flavouring agent."),
    ("NCC(=O)O", "The molecule is glycine, the simplest alpha-amino acid. It has a role as a neurotransmitter and a metabolite."),
    ("[NH3+]CC([O-])=O", "The molecule is the zwitterionic form of glycine with a protonated amino group and a deprotonated carboxy group."),
    ("N[C@@H](C)C(=O)O", "The molecule is L-alanine, a 2-aminopropanoic acid. It has a role as a proteinogenic amino acid."),
    ("N[C@@H](CO)C(=O)O", "The molecule is L-serine, a 2-amino-3-hydroxypropanoic acid and a proteinogenic amino acid."),
    ("OC[C@@H](O)[C@H](O)[C@@H](O)[C@@H](O)C=O", "The molecule is an open-chain aldohexose with four stereocentres, the linear form of glucose."),
    ("OCC(O)CO", "The molecule is glycerol, a propane-1,2,3-triol. It has a role as a humectant and a solvent."),
    ("OCCO", "The molecule is ethylene glycol, an ethane-1,2-diol used as an antifreeze agent."),
    ("CC(=O)C", "The molecule is acetone, a propan-2-one. It has a role as a polar aprotic solvent and a human metabolite."),
    ("CS(=O)C", "The molecule is dimethyl sulfoxide, a sulfinyl compound used as a polar aprotic solvent."),
    ("NC(=O)N", "The molecule is urea, a carbonyl diamide and the principal nitrogenous waste of mammals."),
    ("C#C", "The molecule is acetylene, the simplest alkyne with a carbon-carbon triple bond."),
    ("C=C", "The molecule is ethylene, the simplest alkene and a plant ripening hormone."),
    ("C#N", "The molecule is hydrogen cyanide, written as its heavy-atom skeleton, a one-carbon nitrile."),
    ("CC#N", "The molecule is acetonitrile, a two-carbon nitrile widely used as a chromatography solvent."),
    ("[Na+].[Cl-]", "The molecule is sodium chloride, an ionic salt of a sodium cation and a chloride anion."),
    ("CC(=O)[O-].[Na+]", "The molecule is sodium acetate, the sodium salt of acetic acid. It has a role as a buffer component."),
    ("[NH4+]", "The molecule is the ammonium cation, the conjugate acid of ammonia."),
    ("[O-][N+](=O)[O-]", "The molecule is the nitrate anion, a planar oxyanion of nitrogen."),
    ("[13CH4]", "The molecule is carbon-13 labelled methane, an isotopically enriched one-carbon alkane used as a tracer."),
    ("[2H]O[2H]", "The molecule is deuterium oxide, water in which both hydrogens are the 2H isotope."),
    ("Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]", "The molecule is 2,4,6-trinitrotoluene, a methylbenzene carrying three nitro groups. It has a role as an explosive."),
    ("CN1CCC[C@H]1c1cccnc1", "The molecule is nicotine, a pyridine alkaloid bearing an N-methylpyrrolidine ring. It has a role as a nicotinic acetylcholine receptor agonist."),
    ("NCCc1c[nH]cn1", "The molecule is histamine, a 2-(1H-imidazol-4-yl)ethylamine. It has a role as a neurotransmitter."),
    ("NCCc1ccc(O)c(O)c1", "The molecule is dopamine, a 4-(2-aminoethyl)benzene-1,2-diol catecholamine neurotransmitter."),
    ("CNC[C@H](O)c1ccc(O)c(O)c1", "The molecule is adrenaline, a catecholamine hormone with an N-methylated aminoethanol side chain."),
    ("OC(=O)CC(O)(CC(=O)O)C(=O)O", "The molecule is citric acid, a 2-hydroxypropane-1,2,3-tricarboxylic acid. It has a role as a chelating agent and a food acidity regulator."),
    ("C1CCCCC1", "The molecule is cyclohexane, a six-membered cycloalkane used as a non-polar solvent."),
    ("C%12CCCC%12", "The molecule is cyclopentane, a five-membered cycloalkane, written here with a two-digit ring-closure label."),
    ("C1CC1", "The molecule is cyclopropane, the smallest cycloalkane, with substantial ring strain."),
    ("ClC(Cl)(Cl)Cl", "The molecule is carbon tetrachloride, a fully chlorinated one-carbon compound formerly used as a fire suppressant."),
    ("ClCCl", "The molecule is dichloromethane, a two-chlorine one-carbon solvent used for extractions."),
    ("FC(F)(F)c1ccccc1", "The molecule is (trifluoromethyl)benzene, a benzene ring bearing a trifluoromethyl group."),
    ("BrCCBr", "The molecule is 1,2-dibromoethane, an ethane substituted by bromo groups at both positions."),
    ("ICI", "The molecule is diiodomethane, a dense one-carbon diiodide used in refractive index measurements."),
    ("CSC", "The molecule is dimethyl sulfide, a thioether with a cabbage-like odour released by marine algae."),
    ("CCOC(=O)C", "The molecule is ethyl acetate, the ethyl ester of acetic acid. It has a role as a fruity-smelling solvent."),
    ("COC(=O)c1ccccc1", "The molecule is methyl benzoate, the methyl ester of benzoic acid, with a wintergreen-like odour."),
    ("CCN(CC)CC", "The molecule is triethylamine, a tertiary amine widely used as a base in organic synthesis."),
    ("CC(C)O", "The molecule is propan-2-ol, a secondary alcohol. It has a role as a disinfectant solvent."),
    ("CC(C)(C)O", "The molecule is 2-methylpropan-2-ol, a tertiary alcohol also known as tert-butanol."),
    ("OCc1ccccc1", "The molecule is benzyl alcohol, a phenylmethanol used as a preservative and a solvent."),
    ("O=C1CCCCC1", "The molecule is cyclohexanone, a six-membered cyclic ketone and a nylon precursor."),
    ("C1CCOC1", "The molecule is tetrahydrofuran, a five-membered cyclic ether. It has a role as a polar aprotic solvent."),
    ("C1COCCO1", "The molecule is 1,4-dioxane, a six-membered ring with two oxygens used as a solvent stabiliser."),
]


def alcohol_smiles(n: int) -> str:
    return "C" * n + "O"


def alcohol_name(n: int) -> str:
    if n == 1:
        return "methanol"
    if n == 2:
        return "ethanol"
    return f"{ALKANE_NAMES[n][:-1]}-1-ol".replace("ane-", "an-")


def rows() -> list[tuple[str, str]]:
    out = list(HAND_ROWS)

    for n in sorted(ALKANE_NAMES):
        out.append(
            (
                "C" * n,
                f"The molecule is {ALKANE_NAMES[n]}, a straight-chain alkane with "
                f"{n} carbon atom{'s' if n > 1 else ''}. It has a role as a volatile "
                f"hydrocarbon found in petroleum fractions.",
            )
        )
    # 29-carbon straight chain, the longest alkane in the fixture
    out.append(
        (
            "C" * 29,
            "The molecule is nonacosane, a straight-chain alkane with 29 carbon atoms. "
            "It has a role as a plant cuticular wax component and a volatile oil constituent.",
        )
    )

    for n in (1, 2, 3, 4, 6, 7, 8, 9, 10, 12, 14, 16):
        out.append(
            (
                alcohol_smiles(n),
                f"The molecule is {alcohol_name(n)}, a primary alcohol with a chain of "
                f"{n} carbon atom{'s' if n > 1 else ''}. It has a role as a protic solvent.",
            )
        )

    for n in sorted(ACID_NAMES):
        out.append(
            (
                "C" * (n - 1) + "C(=O)O" if n > 1 else "OC=O",
                f"The molecule is {ACID_NAMES[n]}, a straight-chain fatty acid with "
                f"{n} carbon atom{'s' if n > 1 else ''}. It has a role as a metabolite.",
            )
        )

    amine_names = {1: "methylamine", 2: "ethylamine", 3: "propan-1-amine", 4: "butan-1-amine"}
    for n in sorted(amine_names):
        out.append(
            (
                "C" * n + "N",
                f"The molecule is {amine_names[n]}, a primary aliphatic amine with "
                f"{n} carbon atom{'s' if n > 1 else ''}. It has a role as a base.",
            )
        )
    return out


TEST_ROWS = [
    ("CCCCCO", "The molecule is pentan-1-ol, a primary alcohol with a chain of 5 carbon atoms. It has a role as a protic solvent."),
    ("CCO", "The molecule is ethanol, a primary alcohol with a chain of 2 carbon atoms. It has a role as a protic solvent."),
    ("CCCCCCCCCCC(=O)O", "The molecule is undecanoic acid, a straight-chain fatty acid with 11 carbon atoms. It has a role as a metabolite."),
    ("Cc1ccc(N)cc1", "The molecule is 4-methylaniline, an aminotoluene used in dye synthesis."),
    ("Oc1ccc(Cl)cc1", "The molecule is 4-chlorophenol, a chlorinated hydroxybenzene with antiseptic uses."),
    ("CCCCCN", "The molecule is pentan-1-amine, a primary aliphatic amine with 5 carbon atoms. It has a role as a base."),
    ("O=C(O)c1ccc(O)cc1", "The molecule is 4-hydroxybenzoic acid, a monohydroxybenzoic acid and a paraben precursor."),
    ("CC(=O)OC", "The molecule is methyl acetate, the methyl ester of acetic acid, a fast-evaporating solvent."),
    ("c1ccc(cc1)c1ccccc1", "The molecule is biphenyl, two benzene rings joined by a single bond."),
    ("CN(C)C=O", "The molecule is N,N-dimethylformamide, a polar aprotic amide solvent."),
]


def main() -> None:
    data_dir = Path(__file__).resolve().parent.parent / "tests" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    corpus_rows = rows()
    with open(data_dir / "corpus.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("CID\tSMILES\tdescription\n")
        for i, (smiles, caption) in enumerate(corpus_rows, start=1):
            fh.write(f"{100000 + i}\t{smiles}\t{caption}\n")

    test_rows = list(TEST_ROWS)
    # pad the test split to 50 items with held-out homologue variations
    chain = 21
    while len(test_rows) < 50:
        kind = len(test_rows) % 4
        if kind == 0:
            test_rows.append(
                (
                    "C" * chain,
                    f"The molecule is a straight-chain alkane with {chain} carbon atoms. "
                    "It has a role as a volatile hydrocarbon found in petroleum fractions.",
                )
            )
        elif kind == 1:
            test_rows.append(
                (
                    "C" * chain + "O",
                    f"The molecule is a primary alcohol with a chain of {chain} carbon atoms. "
                    "It has a role as a protic solvent.",
                )
            )
        elif kind == 2:
            test_rows.append(
                (
                    "C" * chain + "C(=O)O",
                    f"The molecule is a straight-chain fatty acid with {chain + 1} carbon atoms. "
                    "It has a role as a metabolite.",
                )
            )
        else:
            test_rows.append(
                (
                    "C" * chain + "N",
                    f"The molecule is a primary aliphatic amine with {chain} carbon atoms. "
                    "It has a role as a base.",
                )
            )
            chain += 1

    with open(data_dir / "test_items.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("CID\tSMILES\tdescription\n")
        for i, (smiles, caption) in enumerate(test_rows, start=1):
            fh.write(f"{200000 + i}\t{smiles}\t{caption}\n")

    print(f"corpus.tsv: {len(corpus_rows)} rows")
    print(f"test_items.tsv: {len(test_rows)} rows")


if __name__ == "__main__":
    main()
