#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fraudlens/dataset.hpp"

namespace fraudlens {

// Symmetric zero-diagonal association weights stored as the strict upper
// triangle, row-major: (0,1), (0,2), ..., (H-2,H-1).
class PairwiseWeights {
public:
    PairwiseWeights() = default;
    explicit PairwiseWeights(std::size_t n_subjects)
        : n_(n_subjects), upper_(pair_count(n_subjects), 0.0) {}
    PairwiseWeights(std::size_t n_subjects, std::vector<double> upper);

    static std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }
    static std::size_t pair_index(std::size_t n, std::size_t h, std::size_t j);

    std::size_t n_subjects() const { return n_; }
    double at(std::size_t h, std::size_t j) const {
        if (h == j) return 0.0;
        return upper_[pair_index(n_, h, j)];
    }
    double& upper(std::size_t k) { return upper_[k]; }
    const std::vector<double>& upper() const { return upper_; }

private:
    std::size_t n_ = 0;
    std::vector<double> upper_;
};

struct Hyperparams {
    double alpha = 1.0;  // precision of the propensity prior
    double beta = 4.0;   // precision of the association prior

    void validate() const;
};

struct VariationalParams {
    std::vector<double> mu_theta;
    std::vector<double> log_sigma_theta;
    std::vector<double> mu_w;         // strict upper triangle
    std::vector<double> log_sigma_w;

    static VariationalParams zeros(std::size_t n_subjects);
    std::size_t n_subjects() const { return mu_theta.size(); }
    std::size_t flat_size() const;

    // Flattened order: mu_theta, log_sigma_theta, mu_w, log_sigma_w.
    std::vector<double> to_flat() const;
    static VariationalParams from_flat(std::size_t n_subjects, std::span<const double> flat);
};

struct FitOptions {
    int epochs = 500;
    double learning_rate = 0.05;
    int mc_samples = 8;
    std::uint64_t seed = 0;
    bool fixed_noise = true;

    void validate() const;
};

struct FitMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double final_elbo = 0.0;
};

struct PriorEstimates {
    std::vector<std::string> vocab_ids;
    std::vector<double> mu_theta;
    PairwiseWeights mu_w;
    FitMeta meta;

    std::string to_json() const;
    static PriorEstimates from_json(const std::string& text);
};

// Standard-normal draws for the reparameterized expectation, laid out
// sample-major: [theta draws (H), then w draws (H(H-1)/2)] per sample.
struct NoiseDraws {
    int mc_samples = 0;
    std::size_t n_subjects = 0;
    std::vector<double> draws;

    static NoiseDraws make(std::uint64_t seed, int mc_samples, std::size_t n_subjects);
    std::span<const double> theta_noise(int sample) const;
    std::span<const double> w_noise(int sample) const;
};

double sigmoid(double z);

// sigma(theta_h + sum_{j != h} W_hj * row_j)
double fraud_probability(std::span<const double> theta, const PairwiseWeights& w,
                         std::span<const std::uint8_t> row, std::size_t h);

// sum_i sum_h [x log p + (1-x) log(1-p)], always <= 0.
double pseudo_log_likelihood(const IncidenceMatrix& x, std::span<const double> theta,
                             const PairwiseWeights& w);

// KL(q || N(0, precision^-1 I)) summed over dimensions, closed form.
double kl_to_prior(std::span<const double> mu, std::span<const double> log_sigma, double precision);

double elbo(const IncidenceMatrix& x, const VariationalParams& params, const Hyperparams& hyper,
            const NoiseDraws& noise);

// Returns the ELBO and writes its analytic gradient into `grad`.
double elbo_with_grad(const IncidenceMatrix& x, const VariationalParams& params,
                      const Hyperparams& hyper, const NoiseDraws& noise, VariationalParams& grad);

PriorEstimates fit(const IncidenceMatrix& x, const SubjectVocabulary& vocab, const Hyperparams& hyper,
                   const FitOptions& opts);

struct RankedSubject {
    std::string subject_id;
    double score = 0.0;
};

// Top-k subjects by posterior propensity mean, ties by vocabulary order.
std::vector<RankedSubject> rank_subjects(const PriorEstimates& est, std::size_t k = 15);

struct SubjectAssociation {
    std::string subject_a;
    std::string subject_b;
    double weight = 0.0;
};

// Strongest positive pairwise couplings, ties by lexicographic pair order.
// m is clamped to the number of pairs.
std::vector<SubjectAssociation> top_associations(const PriorEstimates& est, std::size_t m);

void save_prior(const std::string& path, const PriorEstimates& est);
PriorEstimates load_prior(const std::string& path);

}  // namespace fraudlens
