use crate::polyrep::Monomial;

/// Monomials of total degree at most `k` in an ordered variable subset,
/// graded-lex ordered: by degree, then lexicographically with the first
/// variable's exponent largest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    pub variables: Vec<usize>,
    pub order: usize,
    pub elements: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

pub fn clique_monomials(variables: &[usize], k: usize) -> MonomialBasis {
    let mut elements = Vec::new();
    let mut exps = vec![0u32; variables.len()];
    for d in 0..=k {
        fill(variables, &mut exps, 0, d as u32, &mut elements);
    }
    MonomialBasis {
        variables: variables.to_vec(),
        order: k,
        elements,
    }
}

fn fill(vars: &[usize], exps: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Monomial>) {
    if pos + 1 >= vars.len() {
        if let Some(last) = exps.last_mut() {
            *last = remaining;
        }
        if vars.is_empty() && remaining > 0 {
            return;
        }
        let pairs = vars
            .iter()
            .zip(exps.iter())
            .map(|(&v, &e)| (v as u32, e))
            .collect();
        out.push(Monomial::from_pairs(pairs));
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e;
        fill(vars, exps, pos + 1, remaining - e, out);
    }
    exps[pos] = 0;
}
