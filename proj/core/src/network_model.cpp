// SPDX-License-Identifier: Apache-2.0
#include "dmimo/network_model.hpp"

#include <cmath>
#include <string>

namespace dmimo {

namespace {

bool all_finite(const CMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) {
                return false;
            }
        }
    }
    return true;
}

void check_dims(const ChannelMatrix& channel, const PrecoderMatrix& precoder) {
    if (channel.num_aps() != precoder.num_aps() || channel.num_ues() != precoder.num_ues()) {
        throw InvalidInput("channel is " + std::to_string(channel.num_ues()) + "x" + std::to_string(channel.num_aps()) +
                           " (K x M) but precoder is " + std::to_string(precoder.num_aps()) + "x" +
                           std::to_string(precoder.num_ues()) + " (M x K)");
    }
}

}  // namespace

ChannelMatrix::ChannelMatrix(CMatrix entries, double bandwidth_hz, double noise_density_dbm_per_hz)
    : entries_(std::move(entries)), bandwidth_hz_(bandwidth_hz), noise_density_dbm_per_hz_(noise_density_dbm_per_hz) {
    if (entries_.rows() < 1 || entries_.cols() < 1) {
        throw InvalidInput("channel matrix needs at least one UE and one AP");
    }
    if (!all_finite(entries_)) {
        throw InvalidInput("channel matrix has non-finite entries");
    }
    if (!(bandwidth_hz_ > 0.0)) {
        throw InvalidInput("bandwidth must be positive");
    }
}

PrecoderMatrix::PrecoderMatrix(CMatrix entries) : entries_(std::move(entries)) {
    if (!all_finite(entries_)) {
        throw InvalidInput("precoder has non-finite entries");
    }
}

PrecoderMatrix PrecoderMatrix::zeros(int num_aps, int num_ues) {
    return PrecoderMatrix(CMatrix::Zero(num_aps, num_ues));
}

PairingMatrix::PairingMatrix(Entries entries, SharingBudget budget) : entries_(std::move(entries)), budget_(budget) {
    validate_budget(budget_, num_aps(), num_ues());
    if (!covers_every_ue()) {
        throw InvalidInput("pairing leaves a UE without any serving AP");
    }
    if (!satisfies_budget()) {
        throw InvalidInput("pairing exceeds the data-sharing budget");
    }
}

PairingMatrix PairingMatrix::full(int num_aps, int num_ues) {
    return {Entries::Ones(num_aps, num_ues), SharingBudget{SharingVariant::Total, num_aps * num_ues}};
}

int PairingMatrix::total_active() const {
    return entries_.cast<int>().sum();
}

int PairingMatrix::column_active(int k) const {
    return entries_.col(k).cast<int>().sum();
}

std::vector<int> PairingMatrix::active_per_ue() const {
    std::vector<int> out(static_cast<std::size_t>(num_ues()));
    for (int k = 0; k < num_ues(); ++k) {
        out[static_cast<std::size_t>(k)] = column_active(k);
    }
    return out;
}

bool PairingMatrix::covers_every_ue() const {
    for (int k = 0; k < num_ues(); ++k) {
        if (column_active(k) < 1) {
            return false;
        }
    }
    return true;
}

bool PairingMatrix::satisfies_budget() const {
    if (budget_.variant == SharingVariant::Total) {
        return total_active() <= budget_.b_tot;
    }
    const int cap = budget_.per_ue_cap(num_ues());
    for (int k = 0; k < num_ues(); ++k) {
        if (column_active(k) > cap) {
            return false;
        }
    }
    return true;
}

ZeroSet ZeroSet::from_pairing(const PairingMatrix::Entries& pairing) {
    ZeroSet z(static_cast<int>(pairing.rows()), static_cast<int>(pairing.cols()));
    for (Eigen::Index k = 0; k < pairing.cols(); ++k) {
        for (Eigen::Index m = 0; m < pairing.rows(); ++m) {
            if (pairing(m, k) == 0) {
                z.insert(static_cast<int>(m), static_cast<int>(k));
            }
        }
    }
    return z;
}

int ZeroSet::size() const {
    return mask_.cast<int>().sum();
}

int ZeroSet::free_in_column(int k) const {
    return num_aps() - mask_.col(k).cast<int>().sum();
}

PairingMatrix::Entries ZeroSet::support() const {
    return (mask_.array() == 0).cast<std::uint8_t>().matrix();
}

void validate_budget(const SharingBudget& budget, int num_aps, int num_ues) {
    if (budget.b_tot < 1) {
        throw InvalidInput("b_tot must be a positive integer");
    }
    if (budget.b_tot < num_ues) {
        throw InvalidInput("b_tot = " + std::to_string(budget.b_tot) + " cannot serve all " + std::to_string(num_ues) +
                           " UEs");
    }
    (void)num_aps;
}

PowerBudget::PowerBudget(double p) : p_max_watt(p) {
    if (!(p > 0.0) || !std::isfinite(p)) {
        throw InvalidInput("per-AP power budget must be positive");
    }
}

double compute_sinr(const ChannelMatrix& channel, const PrecoderMatrix& precoder, int ue) {
    check_dims(channel, precoder);
    if (ue < 0 || ue >= channel.num_ues()) {
        throw InvalidInput("UE index " + std::to_string(ue) + " out of range");
    }
    const Eigen::RowVectorXcd received = channel.entries().row(ue) * precoder.entries();
    double interference = 0.0;
    for (int i = 0; i < channel.num_ues(); ++i) {
        if (i != ue) {
            interference += std::norm(received(i));
        }
    }
    return std::norm(received(ue)) / (1.0 + interference);
}

double per_ap_power(const PrecoderMatrix& precoder, int ap) {
    if (ap < 0 || ap >= precoder.num_aps()) {
        throw InvalidInput("AP index " + std::to_string(ap) + " out of range");
    }
    return precoder.entries().row(ap).squaredNorm();
}

SinrReport sinr_report(const ChannelMatrix& channel, const PrecoderMatrix& precoder) {
    check_dims(channel, precoder);
    SinrReport report;
    report.per_ue_sinr.reserve(static_cast<std::size_t>(channel.num_ues()));
    for (int k = 0; k < channel.num_ues(); ++k) {
        report.per_ue_sinr.push_back(compute_sinr(channel, precoder, k));
    }
    for (int m = 0; m < precoder.num_aps(); ++m) {
        report.per_ap_power.push_back(per_ap_power(precoder, m));
    }
    report.min_sinr = *std::min_element(report.per_ue_sinr.begin(), report.per_ue_sinr.end());
    return report;
}

double shannon_rate(double sinr, double bandwidth_hz) {
    if (!(sinr >= 0.0)) {
        throw InvalidInput("SINR must be non-negative");
    }
    if (!(bandwidth_hz > 0.0)) {
        throw InvalidInput("bandwidth must be positive");
    }
    return bandwidth_hz * std::log2(1.0 + sinr);
}

PairingMatrix::Entries pairing_support(const PrecoderMatrix& precoder, double zero_tol) {
    return (precoder.entries().array().abs() > zero_tol).cast<std::uint8_t>().matrix();
}

}  // namespace dmimo
