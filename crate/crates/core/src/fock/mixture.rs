use super::channel::{check_out_dim, Stage};
use super::{DensityMatrix, FockKet, KrausChannel, Transformed, DEFAULT_LEAKAGE_THRESHOLD};
use crate::error::{invalid, Error, Result};
use crate::optics::BeamsplitterConvention;

/// One term `w |ψ⟩⟨ψ|` of a mixture; `ψ` need not be normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub ket: FockKet,
    pub weight: f64,
}

/// Limits on branch fan-out during channel application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOptions {
    /// Maximum number of branches kept after a channel.
    pub branch_cap: usize,
    /// Largest trace fraction that pruning to the cap may discard.
    pub prune_budget: f64,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self {
            branch_cap: 100_000,
            prune_budget: 1e-6,
        }
    }
}

/// Mixed state `ρ = Σ w_k |ψ_k⟩⟨ψ_k|` kept as a list of kets.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchMixture {
    dims: Vec<usize>,
    branches: Vec<Branch>,
    /// Squared norm lost above the cutoff so far.
    pub leakage: f64,
    /// Trace discarded by branch pruning so far.
    pub pruned_weight: f64,
}

impl BranchMixture {
    pub fn pure(ket: FockKet) -> Self {
        Self {
            dims: ket.dims().to_vec(),
            branches: vec![Branch { ket, weight: 1.0 }],
            leakage: 0.0,
            pruned_weight: 0.0,
        }
    }

    pub fn from_branches(branches: Vec<Branch>) -> Result<Self> {
        let first = branches.first().ok_or_else(|| invalid("branches", "empty mixture"))?;
        let dims = first.ket.dims().to_vec();
        for b in &branches {
            if b.ket.dims() != dims.as_slice() {
                return Err(invalid("branches", "branches have different mode dimensions"));
            }
            if !(b.weight >= 0.0) || !b.weight.is_finite() {
                return Err(invalid("branches", format!("weight {} is not a finite non-negative number", b.weight)));
            }
        }
        Ok(Self {
            dims,
            branches,
            leakage: 0.0,
            pruned_weight: 0.0,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.branches.iter().map(|b| b.weight * b.ket.norm_sqr()).sum()
    }

    fn with_branches(&self, dims: Vec<usize>, branches: Vec<Branch>) -> Self {
        Self {
            dims,
            branches,
            leakage: self.leakage,
            pruned_weight: self.pruned_weight,
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(invalid("mode", format!("{mode} out of range for {} modes", self.dims.len())));
        }
        Ok(())
    }

    /// Applies a ket-level map to every branch.
    fn map_kets(&self, f: impl Fn(&FockKet) -> Result<FockKet>) -> Result<Self> {
        let branches = self
            .branches
            .iter()
            .map(|b| {
                Ok(Branch {
                    ket: f(&b.ket)?,
                    weight: b.weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dims = branches.first().map_or(self.dims.clone(), |b| b.ket.dims().to_vec());
        Ok(self.with_branches(dims, branches))
    }

    pub fn apply_phase_shift(&self, mode: usize, phi: f64) -> Result<Self> {
        self.map_kets(|k| k.apply_phase_shift(mode, phi))
    }

    pub fn apply_beamsplitter(
        &self,
        i: usize,
        j: usize,
        transmissivity: f64,
        convention: BeamsplitterConvention,
    ) -> Result<Transformed<Self>> {
        let w = super::beamsplitter_transfer(transmissivity, convention)?;
        self.apply_two_mode_passive(i, j, &w)
    }

    pub fn apply_two_mode_passive(
        &self,
        i: usize,
        j: usize,
        w: &[[num_complex::Complex64; 2]; 2],
    ) -> Result<Transformed<Self>> {
        let mut leakage = 0.0;
        let mut branches = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            let t = b.ket.apply_two_mode_passive(i, j, w)?;
            leakage += b.weight * t.leakage;
            branches.push(Branch {
                ket: t.state,
                weight: b.weight,
            });
        }
        let mut state = self.with_branches(self.dims.clone(), branches);
        state.leakage += leakage;
        let flagged = leakage > DEFAULT_LEAKAGE_THRESHOLD * self.trace();
        Ok(Transformed {
            state,
            leakage,
            flagged,
        })
    }

    /// Changes the cutoff of one mode in every branch.
    pub fn with_mode_cutoff(&self, mode: usize, cutoff: usize) -> Result<Self> {
        self.map_kets(|k| k.with_mode_cutoff(mode, cutoff))
    }

    /// Sends `mode` through the channel. Each branch fans out into one
    /// branch per Kraus index pair; gain indices stop once the remaining
    /// Kraus weight of that branch is below the channel's tail budget.
    pub fn apply_channel(&self, channel: &KrausChannel, mode: usize, options: &ChannelOptions) -> Result<Self> {
        self.check_mode(mode)?;
        self.apply_channel_into(channel, mode, self.dims[mode], true, options)
    }

    /// Like [`Self::apply_channel`] but keeps only output levels up to
    /// `keep_cutoff` on `mode`. Use it when a later projection only looks at
    /// those levels; the discarded part is not counted as leakage.
    pub fn apply_channel_restricted(
        &self,
        channel: &KrausChannel,
        mode: usize,
        keep_cutoff: usize,
        options: &ChannelOptions,
    ) -> Result<Self> {
        self.check_mode(mode)?;
        self.apply_channel_into(channel, mode, check_out_dim(keep_cutoff + 1)?, false, options)
    }

    fn apply_channel_into(
        &self,
        channel: &KrausChannel,
        mode: usize,
        out_dim: usize,
        count_leakage: bool,
        options: &ChannelOptions,
    ) -> Result<Self> {
        let in_dim = self.dims[mode];
        let mut leakage = 0.0;
        let mut branches = Vec::new();
        for b in &self.branches {
            let norm = b.ket.norm_sqr();
            if norm == 0.0 {
                continue;
            }
            let mut remaining = norm;
            for l in 0..in_dim.min(channel.max_loss_index + 1) {
                let (lost, w_l) = channel.apply_stage(&b.ket, mode, Stage::Loss(l), in_dim)?;
                if w_l == 0.0 {
                    continue;
                }
                // Weight still owed to higher gain indices, tracked relative
                // to the part the amplifier moves out of k = 0.
                let mut gain_left = 0.0;
                let mut noise = 0.0;
                for k in 0..=channel.max_gain_index {
                    let (out, ideal) = channel.apply_stage(&lost, mode, Stage::Gain(k), out_dim)?;
                    if k == 0 {
                        noise = w_l - ideal;
                        gain_left = noise;
                    } else {
                        gain_left -= ideal;
                    }
                    let kept = out.norm_sqr();
                    if count_leakage {
                        leakage += b.weight * (ideal - kept).max(0.0);
                    }
                    if kept > 0.0 {
                        branches.push(Branch {
                            ket: out,
                            weight: b.weight,
                        });
                    }
                    if gain_left <= super::KRAUS_TAIL_BUDGET * noise {
                        break;
                    }
                }
                remaining -= w_l;
                if remaining <= 0.0 {
                    break;
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[mode] = out_dim;
        let mut out = self.with_branches(dims, branches);
        out.leakage += leakage;
        out.prune(options)?;
        Ok(out)
    }

    /// Sends `mode` through the channel and projects the output onto vacuum,
    /// removing the mode. Only `B_0` reaches the vacuum, so each input
    /// level `l` yields one branch `G^{-1/2}(1−τ)^{l/2}⟨l|ψ⟩`.
    pub fn herald_vacuum_after_channel(&self, channel: &KrausChannel, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if self.n_modes() < 2 {
            return Err(invalid("mode", "cannot herald the only mode"));
        }
        let mut branches = Vec::new();
        for b in &self.branches {
            for l in 0..self.dims[mode] {
                let factor = channel.loss_element(l, l) * channel.gain_element(0, 0);
                if factor == 0.0 {
                    continue;
                }
                let ket = b.ket.project_unnormalized(mode, l)?;
                if ket.norm_sqr() > 0.0 {
                    branches.push(Branch {
                        ket: ket.scaled(factor),
                        weight: b.weight,
                    });
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(mode);
        if branches.is_empty() {
            return Err(Error::HeraldImpossible(0.0));
        }
        Ok(self.with_branches(dims, branches))
    }

    /// Applies `⟨n|` on `mode` to every branch without renormalizing.
    pub fn project_unnormalized(&self, mode: usize, outcome: usize) -> Result<Self> {
        self.map_kets(|k| k.project_unnormalized(mode, outcome))
    }

    /// Projects `mode` onto `|outcome⟩`; returns the renormalized reduced
    /// mixture and the outcome probability.
    pub fn project(&self, mode: usize, outcome: usize) -> Result<(Self, f64)> {
        let total = self.trace();
        let reduced = self.project_unnormalized(mode, outcome)?;
        let p = reduced.trace() / total;
        if !(p >= crate::gaussian::MIN_HERALD_PROBABILITY) {
            return Err(Error::HeraldImpossible(p));
        }
        let mut reduced = reduced;
        let scale = 1.0 / reduced.trace();
        for b in &mut reduced.branches {
            b.weight *= scale;
        }
        Ok((reduced, p))
    }

    /// Drops the smallest branches beyond the cap.
    fn prune(&mut self, options: &ChannelOptions) -> Result<()> {
        let before = self.branches.len();
        if before <= options.branch_cap {
            return Ok(());
        }
        let total = self.trace();
        let mut scored: Vec<(f64, usize)> = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| (b.weight * b.ket.norm_sqr(), i))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let dropped: f64 = scored[options.branch_cap..].iter().map(|s| s.0).sum();
        if dropped > options.prune_budget * total {
            return Err(Error::BranchOverflow {
                count: before,
                cap: options.branch_cap,
                pruned: dropped,
            });
        }
        let mut keep: Vec<usize> = scored[..options.branch_cap].iter().map(|s| s.1).collect();
        keep.sort_unstable();
        let old = std::mem::take(&mut self.branches);
        let mut it = keep.into_iter().peekable();
        for (i, b) in old.into_iter().enumerate() {
            if it.peek() == Some(&i) {
                it.next();
                self.branches.push(b);
            }
        }
        self.pruned_weight += dropped;
        Ok(())
    }

    /// Dense operator on all modes.
    pub fn to_density(&self) -> DensityMatrix {
        let mut rho = DensityMatrix::zeros(self.dims.clone());
        for b in &self.branches {
            rho.add_outer(&b.ket, b.weight);
        }
        rho
    }

    /// Dense reduced operator on `keep`, in that order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let mut out: Option<DensityMatrix> = None;
        for b in &self.branches {
            let part = DensityMatrix::reduced_from_ket(&b.ket, keep, b.weight)?;
            out = Some(match out {
                None => part,
                Some(acc) => acc.added(&part)?,
            });
        }
        out.ok_or_else(|| invalid("branches", "empty mixture"))
    }

    /// Covariance matrix of a two-mode mixture.
    pub fn extract_cm(&self) -> Result<crate::gaussian::CovarianceMatrix> {
        if self.n_modes() != 2 {
            return Err(invalid("mixture", "covariance extraction expects exactly two modes"));
        }
        self.to_density().extract_cm()
    }
}
