#include "fraudlens/prior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/rng.hpp"

namespace fraudlens {

using nlohmann::json;

PairwiseWeights::PairwiseWeights(std::size_t n_subjects, std::vector<double> upper)
    : n_(n_subjects), upper_(std::move(upper)) {
    if (upper_.size() != pair_count(n_subjects)) {
        throw ValidationError("pairwise weight vector has wrong length");
    }
}

std::size_t PairwiseWeights::pair_index(std::size_t n, std::size_t h, std::size_t j) {
    if (h > j) std::swap(h, j);
    // Row-major strict upper triangle.
    return h * (2 * n - h - 1) / 2 + (j - h - 1);
}

void Hyperparams::validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw ValidationError("hyperparameters alpha and beta must be positive");
    }
}

void FitOptions::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (mc_samples < 1) throw ValidationError("mc_samples must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
}

VariationalParams VariationalParams::zeros(std::size_t n_subjects) {
    const std::size_t pairs = PairwiseWeights::pair_count(n_subjects);
    return VariationalParams{std::vector<double>(n_subjects, 0.0), std::vector<double>(n_subjects, 0.0),
                             std::vector<double>(pairs, 0.0), std::vector<double>(pairs, 0.0)};
}

std::size_t VariationalParams::flat_size() const {
    return mu_theta.size() + log_sigma_theta.size() + mu_w.size() + log_sigma_w.size();
}

std::vector<double> VariationalParams::to_flat() const {
    std::vector<double> flat;
    flat.reserve(flat_size());
    flat.insert(flat.end(), mu_theta.begin(), mu_theta.end());
    flat.insert(flat.end(), log_sigma_theta.begin(), log_sigma_theta.end());
    flat.insert(flat.end(), mu_w.begin(), mu_w.end());
    flat.insert(flat.end(), log_sigma_w.begin(), log_sigma_w.end());
    return flat;
}

VariationalParams VariationalParams::from_flat(std::size_t n_subjects, std::span<const double> flat) {
    const std::size_t pairs = PairwiseWeights::pair_count(n_subjects);
    if (flat.size() != 2 * n_subjects + 2 * pairs) {
        throw ValidationError("flat parameter vector has wrong length");
    }
    VariationalParams p;
    auto it = flat.begin();
    p.mu_theta.assign(it, it + n_subjects);
    it += n_subjects;
    p.log_sigma_theta.assign(it, it + n_subjects);
    it += n_subjects;
    p.mu_w.assign(it, it + pairs);
    it += pairs;
    p.log_sigma_w.assign(it, it + pairs);
    return p;
}

NoiseDraws NoiseDraws::make(std::uint64_t seed, int mc_samples, std::size_t n_subjects) {
    NoiseDraws noise;
    noise.mc_samples = mc_samples;
    noise.n_subjects = n_subjects;
    const std::size_t per_sample = n_subjects + PairwiseWeights::pair_count(n_subjects);
    noise.draws.resize(static_cast<std::size_t>(mc_samples) * per_sample);
    Rng rng(seed);
    for (double& d : noise.draws) d = rng.next_normal();
    return noise;
}

std::span<const double> NoiseDraws::theta_noise(int sample) const {
    const std::size_t per_sample = n_subjects + PairwiseWeights::pair_count(n_subjects);
    return {draws.data() + static_cast<std::size_t>(sample) * per_sample, n_subjects};
}

std::span<const double> NoiseDraws::w_noise(int sample) const {
    const std::size_t pairs = PairwiseWeights::pair_count(n_subjects);
    const std::size_t per_sample = n_subjects + pairs;
    return {draws.data() + static_cast<std::size_t>(sample) * per_sample + n_subjects, pairs};
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// x*z - softplus(z) == x*log(p) + (1-x)*log(1-p) for p = sigmoid(z).
double bernoulli_log_prob(std::uint8_t x, double z) { return (x ? z : 0.0) - softplus(z); }

// Activations z_h = theta_h + sum_j W_hj x_j for one case row. W has zero
// diagonal so the j == h term contributes nothing.
void activations(std::span<const double> theta, const PairwiseWeights& w,
                 const std::uint8_t* row, std::size_t n, std::vector<double>& z) {
    z.assign(theta.begin(), theta.end());
    for (std::size_t j = 0; j < n; ++j) {
        if (!row[j]) continue;
        for (std::size_t h = 0; h < n; ++h) {
            if (h != j) z[h] += w.at(h, j);
        }
    }
}

}  // namespace

double fraud_probability(std::span<const double> theta, const PairwiseWeights& w,
                         std::span<const std::uint8_t> row, std::size_t h) {
    const std::size_t n = theta.size();
    if (h >= n) throw ValidationError("subject index out of range");
    if (row.size() != n || w.n_subjects() != n) {
        throw ValidationError("fraud_probability dimension mismatch");
    }
    double z = theta[h];
    for (std::size_t j = 0; j < n; ++j) {
        if (j != h && row[j]) z += w.at(h, j);
    }
    return sigmoid(z);
}

double pseudo_log_likelihood(const IncidenceMatrix& x, std::span<const double> theta,
                             const PairwiseWeights& w) {
    const std::size_t n = x.n_subjects();
    if (theta.size() != n || w.n_subjects() != n) {
        throw ValidationError("pseudo_log_likelihood dimension mismatch");
    }
    std::vector<double> z;
    double total = 0.0;
    for (std::size_t i = 0; i < x.n_cases(); ++i) {
        activations(theta, w, x.row(i), n, z);
        for (std::size_t h = 0; h < n; ++h) {
            total += bernoulli_log_prob(x.at(i, h), z[h]);
        }
    }
    return total;
}

double kl_to_prior(std::span<const double> mu, std::span<const double> log_sigma, double precision) {
    if (!(precision > 0.0)) throw ValidationError("precision must be positive");
    if (mu.size() != log_sigma.size()) throw ValidationError("kl_to_prior dimension mismatch");
    double total = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d) {
        const double var = std::exp(2.0 * log_sigma[d]);
        total += 0.5 * (precision * (mu[d] * mu[d] + var) - 1.0 - std::log(precision) -
                        2.0 * log_sigma[d]);
    }
    return total;
}

double elbo(const IncidenceMatrix& x, const VariationalParams& params, const Hyperparams& hyper,
            const NoiseDraws& noise) {
    const std::size_t n = x.n_subjects();
    std::vector<double> theta_s(n);
    PairwiseWeights w_s(n);
    std::vector<double> z;

    double ll_total = 0.0;
    for (int s = 0; s < noise.mc_samples; ++s) {
        const auto eps_t = noise.theta_noise(s);
        const auto eps_w = noise.w_noise(s);
        for (std::size_t h = 0; h < n; ++h) {
            theta_s[h] = params.mu_theta[h] + std::exp(params.log_sigma_theta[h]) * eps_t[h];
        }
        for (std::size_t k = 0; k < params.mu_w.size(); ++k) {
            w_s.upper(k) = params.mu_w[k] + std::exp(params.log_sigma_w[k]) * eps_w[k];
        }
        for (std::size_t i = 0; i < x.n_cases(); ++i) {
            activations(theta_s, w_s, x.row(i), n, z);
            for (std::size_t h = 0; h < n; ++h) {
                ll_total += bernoulli_log_prob(x.at(i, h), z[h]);
            }
        }
    }
    const double ll_mean = ll_total / noise.mc_samples;
    return ll_mean - kl_to_prior(params.mu_theta, params.log_sigma_theta, hyper.alpha) -
           kl_to_prior(params.mu_w, params.log_sigma_w, hyper.beta);
}

double elbo_with_grad(const IncidenceMatrix& x, const VariationalParams& params,
                      const Hyperparams& hyper, const NoiseDraws& noise, VariationalParams& grad) {
    const std::size_t n = x.n_subjects();
    const std::size_t pairs = params.mu_w.size();
    grad = VariationalParams::zeros(n);

    std::vector<double> theta_s(n);
    PairwiseWeights w_s(n);
    std::vector<double> z(n);
    std::vector<double> resid(n);
    std::vector<double> g_theta(n);   // dLL/d(theta tilde) for one sample
    std::vector<double> g_w(pairs);   // dLL/d(w tilde) for one sample

    double ll_total = 0.0;
    for (int s = 0; s < noise.mc_samples; ++s) {
        const auto eps_t = noise.theta_noise(s);
        const auto eps_w = noise.w_noise(s);
        for (std::size_t h = 0; h < n; ++h) {
            theta_s[h] = params.mu_theta[h] + std::exp(params.log_sigma_theta[h]) * eps_t[h];
        }
        for (std::size_t k = 0; k < pairs; ++k) {
            w_s.upper(k) = params.mu_w[k] + std::exp(params.log_sigma_w[k]) * eps_w[k];
        }
        std::fill(g_theta.begin(), g_theta.end(), 0.0);
        std::fill(g_w.begin(), g_w.end(), 0.0);

        for (std::size_t i = 0; i < x.n_cases(); ++i) {
            const std::uint8_t* row = x.row(i);
            activations(theta_s, w_s, row, n, z);
            for (std::size_t h = 0; h < n; ++h) {
                ll_total += bernoulli_log_prob(row[h], z[h]);
                resid[h] = static_cast<double>(row[h]) - sigmoid(z[h]);
                g_theta[h] += resid[h];
            }
            // d z_ih / d w_hj = x_ij, so every active column j spreads its
            // residual row across the pairs it touches.
            for (std::size_t j = 0; j < n; ++j) {
                if (!row[j]) continue;
                for (std::size_t h = 0; h < n; ++h) {
                    if (h == j) continue;
                    g_w[PairwiseWeights::pair_index(n, h, j)] += resid[h];
                }
            }
        }

        for (std::size_t h = 0; h < n; ++h) {
            grad.mu_theta[h] += g_theta[h];
            grad.log_sigma_theta[h] +=
                g_theta[h] * std::exp(params.log_sigma_theta[h]) * eps_t[h];
        }
        for (std::size_t k = 0; k < pairs; ++k) {
            grad.mu_w[k] += g_w[k];
            grad.log_sigma_w[k] += g_w[k] * std::exp(params.log_sigma_w[k]) * eps_w[k];
        }
    }

    const double inv_s = 1.0 / noise.mc_samples;
    for (auto* vec : {&grad.mu_theta, &grad.log_sigma_theta, &grad.mu_w, &grad.log_sigma_w}) {
        for (double& g : *vec) g *= inv_s;
    }
    // KL terms enter the objective negatively.
    for (std::size_t h = 0; h < n; ++h) {
        grad.mu_theta[h] -= hyper.alpha * params.mu_theta[h];
        grad.log_sigma_theta[h] -= hyper.alpha * std::exp(2.0 * params.log_sigma_theta[h]) - 1.0;
    }
    for (std::size_t k = 0; k < pairs; ++k) {
        grad.mu_w[k] -= hyper.beta * params.mu_w[k];
        grad.log_sigma_w[k] -= hyper.beta * std::exp(2.0 * params.log_sigma_w[k]) - 1.0;
    }

    return ll_total * inv_s -
           kl_to_prior(params.mu_theta, params.log_sigma_theta, hyper.alpha) -
           kl_to_prior(params.mu_w, params.log_sigma_w, hyper.beta);
}

PriorEstimates fit(const IncidenceMatrix& x, const SubjectVocabulary& vocab, const Hyperparams& hyper,
                   const FitOptions& opts) {
    x.validate();
    hyper.validate();
    opts.validate();
    if (vocab.size() != x.n_subjects()) {
        throw ValidationError("vocabulary size does not match incidence matrix columns");
    }

    const std::size_t n = x.n_subjects();
    VariationalParams params = VariationalParams::zeros(n);
    VariationalParams grad;

    NoiseDraws noise = NoiseDraws::make(opts.seed, opts.mc_samples, n);
    Rng epoch_rng(opts.seed ^ 0x5eedf17ULL);

    const std::size_t dim = params.flat_size();
    std::vector<double> m(dim, 0.0), v(dim, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    double objective = 0.0;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        if (!opts.fixed_noise) {
            noise = NoiseDraws::make(epoch_rng.next_u64(), opts.mc_samples, n);
        }
        objective = elbo_with_grad(x, params, hyper, noise, grad);
        if (!std::isfinite(objective)) {
            throw Error("non-finite ELBO at epoch " + std::to_string(epoch));
        }

        std::vector<double> flat = params.to_flat();
        const std::vector<double> g = grad.to_flat();
        const double bc1 = 1.0 - std::pow(beta1, epoch);
        const double bc2 = 1.0 - std::pow(beta2, epoch);
        for (std::size_t d = 0; d < dim; ++d) {
            m[d] = beta1 * m[d] + (1.0 - beta1) * g[d];
            v[d] = beta2 * v[d] + (1.0 - beta2) * g[d] * g[d];
            flat[d] += opts.learning_rate * (m[d] / bc1) / (std::sqrt(v[d] / bc2) + adam_eps);
        }
        params = VariationalParams::from_flat(n, flat);
    }

    const double final_elbo = opts.fixed_noise ? elbo(x, params, hyper, noise) : objective;

    PriorEstimates est;
    for (const auto& s : vocab.subjects()) est.vocab_ids.push_back(s.id);
    est.mu_theta = params.mu_theta;
    est.mu_w = PairwiseWeights(n, params.mu_w);
    est.meta = FitMeta{opts.seed, opts.epochs, hyper.alpha, hyper.beta, final_elbo};
    return est;
}

std::vector<RankedSubject> rank_subjects(const PriorEstimates& est, std::size_t k) {
    const std::size_t n = est.mu_theta.size();
    if (k < 1 || k > n) {
        throw ValidationError("rank_subjects: k must be in [1, " + std::to_string(n) + "], got " +
                              std::to_string(k));
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return est.mu_theta[a] > est.mu_theta[b];
    });
    std::vector<RankedSubject> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(RankedSubject{est.vocab_ids[order[i]], est.mu_theta[order[i]]});
    }
    return out;
}

std::vector<SubjectAssociation> top_associations(const PriorEstimates& est, std::size_t m) {
    const std::size_t n = est.mu_theta.size();
    struct Entry {
        std::size_t h, j;
        double w;
    };
    std::vector<Entry> entries;
    entries.reserve(PairwiseWeights::pair_count(n));
    for (std::size_t h = 0; h < n; ++h) {
        for (std::size_t j = h + 1; j < n; ++j) {
            entries.push_back(Entry{h, j, est.mu_w.at(h, j)});
        }
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.w > b.w; });
    if (m < entries.size()) entries.resize(m);
    std::vector<SubjectAssociation> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(SubjectAssociation{est.vocab_ids[e.h], est.vocab_ids[e.j], e.w});
    }
    return out;
}

std::string PriorEstimates::to_json() const {
    json j{{"vocab_ids", vocab_ids},
           {"mu_theta", mu_theta},
           {"mu_w_upper", mu_w.upper()},
           {"meta",
            {{"seed", meta.seed},
             {"epochs", meta.epochs},
             {"alpha", meta.alpha},
             {"beta", meta.beta},
             {"final_elbo", meta.final_elbo}}}};
    return j.dump();
}

PriorEstimates PriorEstimates::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed prior estimates JSON: ") + e.what());
    }
    PriorEstimates est;
    est.vocab_ids = j.at("vocab_ids").get<std::vector<std::string>>();
    est.mu_theta = j.at("mu_theta").get<std::vector<double>>();
    est.mu_w = PairwiseWeights(est.vocab_ids.size(), j.at("mu_w_upper").get<std::vector<double>>());
    const auto& meta = j.at("meta");
    est.meta = FitMeta{meta.at("seed").get<std::uint64_t>(), meta.at("epochs").get<int>(),
                       meta.at("alpha").get<double>(), meta.at("beta").get<double>(),
                       meta.at("final_elbo").get<double>()};
    if (est.mu_theta.size() != est.vocab_ids.size()) {
        throw ValidationError("prior estimates: mu_theta length does not match vocab_ids");
    }
    return est;
}

void save_prior(const std::string& path, const PriorEstimates& est) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write prior file: " + path);
    out << est.to_json() << "\n";
}

PriorEstimates load_prior(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open prior file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return PriorEstimates::from_json(text);
}

}  // namespace fraudlens
