#include "speclaw/model.hpp"

#include <algorithm>
#include <cmath>

namespace speclaw {

namespace {

std::vector<SpectralAtom> normalize_atoms(std::vector<SpectralAtom> atoms) {
    for (const auto& a : atoms) {
        if (!(a.s >= 0.0) || !std::isfinite(a.s))
            throw Error("population atom with negative or non-finite eigenvalue");
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight))
            throw Error("population atom with negative or non-finite weight");
    }
    // Atoms at s = 0 carry no pole of f; they only contribute mass at zero.
    std::erase_if(atoms, [](const SpectralAtom& a) { return a.s == 0.0 || a.weight == 0.0; });
    std::sort(atoms.begin(), atoms.end(),
              [](const SpectralAtom& a, const SpectralAtom& b) { return a.s > b.s; });
    // Merge numerically coincident eigenvalues so the s_i stay distinct.
    std::vector<SpectralAtom> merged;
    for (const auto& a : atoms) {
        if (!merged.empty() && std::abs(merged.back().s - a.s) <= 1e-14 * merged.back().s)
            merged.back().weight += a.weight;
        else
            merged.push_back(a);
    }
    return merged;
}

}  // namespace

PopulationModel::PopulationModel(double phi, std::vector<SpectralAtom> atoms,
                                 std::optional<ModelDims> dims)
    : phi_(phi), atoms_(normalize_atoms(std::move(atoms))), dims_(dims) {
    if (!(phi_ > 0.0) || !std::isfinite(phi_)) throw Error("dimensional ratio phi must be positive");
    if (atoms_.empty()) throw Error("population model needs at least one atom with s > 0");
    double total = 0.0;
    for (const auto& a : atoms_) total += a.weight;
    if (total > 1.0 + 1e-12) throw Error("atom weights sum to more than 1");
    zero_mass_ = std::max(0.0, 1.0 - total);
    if (dims_) {
        if (dims_->M <= 0 || dims_->N <= 0 || dims_->Mhat <= 0)
            throw Error("model dims must be positive");
        const double ratio = static_cast<double>(dims_->M) / dims_->N;
        if (std::abs(ratio - phi_) > 1e-9 * std::max(1.0, phi_))
            throw Error("dims inconsistent with phi = M/N");
    }
}

void PopulationModel::require_admissible(double tau) const {
    if (atoms_.front().s > 1.0 / tau)
        throw Error("largest population eigenvalue exceeds 1/tau");
    double small = zero_mass_;
    for (const auto& a : atoms_)
        if (a.s <= tau) small += a.weight;
    if (small > 1.0 - tau)
        throw Error("population spectrum concentrated near zero beyond 1 - tau");
}

PopulationModel identity_model(double phi, std::optional<ModelDims> dims) {
    return PopulationModel(phi, {{1.0, 1.0}}, dims);
}

PopulationModel single_atom_model(double phi, double s, std::optional<ModelDims> dims) {
    return PopulationModel(phi, {{s, 1.0}}, dims);
}

}  // namespace speclaw
