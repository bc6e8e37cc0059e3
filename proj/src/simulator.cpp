#include "fedsim/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "fedsim/util.hpp"

namespace fedsim {

namespace {

double grad_norm(const GradientSet& g) {
  return std::sqrt(g.w1.squaredNorm() + g.b1.squaredNorm() +
                   g.w2.squaredNorm() + g.b2.squaredNorm());
}

std::string sk_filename(const std::string& method, std::uint64_t seed) {
  return "sk_" + method + "_seed" + std::to_string(seed) + ".bin";
}

}  // namespace

double evaluate(const ModelParams& params, const TestSet& test) {
  require(test.size() > 0, "evaluate: empty test set");
  require(test.features.rows() == static_cast<Index>(test.labels.size()),
          "evaluate: feature/label count mismatch");
  const Matrix logits = logits_batch(params, test.features);
  std::int64_t hits = 0;
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    if (best == static_cast<Index>(test.labels[static_cast<std::size_t>(i)]))
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

LocalTrainResult local_train(const ClientDataset& client,
                             const ModelParams& init, const GlobalSk* global_sk,
                             const ExperimentConfig& cfg, Rng shuffle_rng,
                             std::int64_t round) {
  require(client.size() > 0, "local_train: client " +
                                 std::to_string(client.client_id) +
                                 " has no samples");
  const Method method = cfg.method_enum();
  LossConfig loss_cfg;
  loss_cfg.method = method;
  loss_cfg.tau = cfg.fedskc.tau;
  loss_cfg.mu_prox = method == Method::FedProx ? cfg.fedprox.mu : 0.0;
  loss_cfg.lambda_lcl = cfg.fedskc.lambda_lcl;
  loss_cfg.u_floor = cfg.fedskc.u_floor;

  const bool use_lcl = method == Method::FedSkc &&
                       loss_cfg.lambda_lcl != 0.0 && global_sk != nullptr;
  if (!use_lcl) loss_cfg.lambda_lcl = 0.0;
  const bool use_prox = method == Method::FedProx && loss_cfg.mu_prox != 0.0;

  const Matrix x = client.feature_matrix();
  const std::vector<int> labels = client.labels();
  const auto n = client.size();
  const auto batch = cfg.train.batch;

  ModelParams params = init;
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  LocalTrainResult result;
  for (std::int64_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    ClassNormalizers normalizers;
    if (use_lcl) {
      normalizers = compute_normalizers(params, client, global_sk->per_class,
                                        loss_cfg.u_floor);
    }
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::int64_t start = 0; start < n; start += batch) {
      const auto b = std::min(batch, n - start);
      Matrix xb(b, x.cols());
      std::vector<int> yb(static_cast<std::size_t>(b));
      for (std::int64_t i = 0; i < b; ++i) {
        const auto src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(src);
        yb[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(src)];
      }
      LossInputs inputs;
      if (use_lcl) {
        inputs.sk_vectors = &global_sk->per_class;
        inputs.normalizers = &normalizers;
      }
      if (use_prox) inputs.prox_anchor = &init;
      auto [loss, grads] = backward(params, xb, yb, loss_cfg, inputs);
      if (!std::isfinite(loss)) {
        throw RunAbortError(
            "local training aborted: non-finite loss at client " +
            std::to_string(client.client_id) + ", round " +
            std::to_string(round) + ", epoch " + std::to_string(epoch));
      }
      result.max_grad_norm = std::max(result.max_grad_norm, grad_norm(grads));
      params = sgd_step(params, grads, cfg.train.eta);
      loss_sum += loss * static_cast<double>(b);
    }
    if (epoch + 1 == cfg.train.epochs)
      result.train_loss = loss_sum / static_cast<double>(n);
  }
  result.sk = compute_local_sk(params, client);
  result.params = std::move(params);
  return result;
}

Experiment Experiment::prepare(const ExperimentConfig& cfg,
                               std::uint64_t seed) {
  validate_config(cfg);
  const auto classes = static_cast<int>(cfg.data.classes);
  const auto input_dim = static_cast<int>(cfg.data.input_dim);

  Experiment exp{cfg, StreamFactory(seed), {}, {}, {}};
  auto centers_rng = exp.streams.stream("centers");
  const Matrix centers =
      class_centers(classes, input_dim, cfg.data.sep, centers_rng);

  const auto profile = longtail_profile(classes, cfg.data.n_max, cfg.data.rho);
  auto data_rng = exp.streams.stream("data");
  const auto samples = sample_blobs(centers, profile, cfg.data.noise, data_rng);

  auto part_rng = exp.streams.stream("partition");
  auto part = dirichlet_partition(samples, classes,
                                  static_cast<int>(cfg.federation.clients),
                                  cfg.data.alpha, part_rng);
  exp.clients = std::move(part.clients);
  exp.manifest = std::move(part.manifest);
  exp.manifest.seed = seed;
  exp.manifest.rho = cfg.data.rho;

  const std::vector<std::int64_t> test_profile(
      static_cast<std::size_t>(classes), cfg.data.test_per_class);
  auto test_rng = exp.streams.stream("test");
  const auto test_samples =
      sample_blobs(centers, test_profile, cfg.data.noise, test_rng);
  exp.test.features.resize(static_cast<Index>(test_samples.size()), input_dim);
  exp.test.labels.resize(test_samples.size());
  for (std::size_t i = 0; i < test_samples.size(); ++i) {
    exp.test.features.row(static_cast<Index>(i)) = test_samples[i].features;
    exp.test.labels[i] = test_samples[i].label;
  }
  return exp;
}

FederationState initial_state(const Experiment& exp) {
  FederationState s;
  s.round = 0;
  auto init_rng = exp.streams.stream("init");
  s.global = init_params({exp.cfg.data.input_dim, exp.cfg.train.hidden,
                          exp.cfg.data.classes},
                         init_rng);
  s.prev_global = s.global;
  s.sk = GlobalSk::zeros(exp.cfg.data.classes);
  s.prev_sk = GlobalSk::zeros(exp.cfg.data.classes);
  s.variances = Vector::Zero(exp.cfg.data.classes);
  s.prev_variances = Vector::Zero(exp.cfg.data.classes);
  return s;
}

RoundOutcome run_round(const Experiment& exp, const FederationState& state,
                       std::int64_t r) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig& cfg = exp.cfg;
  const Method method = cfg.method_enum();

  auto sample_rng = exp.streams.stream("sample", 0, static_cast<std::uint64_t>(r));
  const auto sampled = sample_clients(
      static_cast<int>(cfg.federation.clients), cfg.federation.epsilon,
      sample_rng);
  const auto n_sampled = static_cast<std::int64_t>(sampled.size());

  // Knowledge only exists once a round has merged it.
  const GlobalSk* broadcast_sk =
      (method == Method::FedSkc && state.sk.round >= 0) ? &state.sk : nullptr;

  std::vector<LocalTrainResult> results(sampled.size());
  auto train_one = [&](std::size_t slot) {
    const auto id = sampled[slot];
    results[slot] = local_train(
        exp.clients[static_cast<std::size_t>(id)], state.global, broadcast_sk,
        cfg, exp.streams.stream("shuffle", static_cast<std::uint64_t>(id),
                                static_cast<std::uint64_t>(r)),
        r);
  };
  const auto threads =
      std::max<std::int64_t>(1, std::min(cfg.train.threads, n_sampled));
  if (threads <= 1) {
    for (std::size_t slot = 0; slot < sampled.size(); ++slot) train_one(slot);
  } else {
    std::vector<std::exception_ptr> errors(sampled.size());
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (std::int64_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t slot = static_cast<std::size_t>(t);
             slot < sampled.size();
             slot += static_cast<std::size_t>(threads)) {
          try {
            train_one(slot);
          } catch (...) {
            errors[slot] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<ModelParams> params_list;
  std::vector<std::int64_t> sizes;
  params_list.reserve(sampled.size());
  sizes.reserve(sampled.size());
  double loss_sum = 0.0;
  double max_grad = 0.0;
  for (std::size_t slot = 0; slot < sampled.size(); ++slot) {
    params_list.push_back(results[slot].params);
    sizes.push_back(exp.clients[static_cast<std::size_t>(sampled[slot])].size());
    loss_sum += results[slot].train_loss;
    max_grad = std::max(max_grad, results[slot].max_grad_norm);
  }

  RoundOutcome out;
  out.max_grad_norm = max_grad;
  FederationState next;
  next.round = r + 1;
  next.prev_global = state.global;
  next.prev_sk = state.sk;
  next.prev_variances = state.variances;

  AggregationWeights weights;
  if (method == Method::FedSkc) {
    std::vector<LocalSk> sks;
    sks.reserve(results.size());
    for (const auto& res : results) sks.push_back(res.sk);
    next.sk = merge_global_sk(sks, static_cast<int>(cfg.fedskc.neighbors),
                              state.sk, r);
    if (cfg.fedskc.gda) {
      std::vector<double> discrepancies;
      discrepancies.reserve(sks.size());
      for (const auto& sk : sks) discrepancies.push_back(discrepancy(sk, next.sk));
      weights = gda_weights(sizes, discrepancies, cfg.gda_mode_enum()).weights;
    } else {
      weights = fedavg_weights(sizes);
    }
  } else {
    next.sk = state.sk;
    weights = fedavg_weights(sizes);
  }
  next.variances = class_variances(next.sk);
  next.global = aggregate(params_list, weights);

  bool reviewed = false;
  bool skipped = false;
  double gamma = 0.0;
  if (method == Method::FedSkc && cfg.fedskc.gpr && r >= 1) {
    const GprResult review =
        gpr_update(next, cfg.fedskc.beta, cfg.fedskc.gpr_affine);
    next.global = review.params;
    reviewed = !review.skipped;
    skipped = review.skipped;
    gamma = review.gamma;
  }

  const double acc = evaluate(next.global, exp.test);

  RoundMetrics m;
  m.round = r;
  m.method = cfg.method;
  m.seed = exp.streams.seed();
  m.train_loss = loss_sum / static_cast<double>(n_sampled);
  m.test_acc = acc;
  m.participants.assign(sampled.begin(), sampled.end());
  if (reviewed) m.gamma = gamma;
  const auto t1 = std::chrono::steady_clock::now();
  m.wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();

  std::ostringstream log;
  log << r << '\t' << cfg.method << '\t' << n_sampled << '\t'
      << format_double(weights.minCoeff()) << '\t'
      << format_double(weights.maxCoeff()) << '\t'
      << (reviewed ? format_double(gamma) : std::string("-")) << '\t'
      << (skipped ? 1 : 0);
  out.server_log = log.str();
  out.metrics = std::move(m);
  out.state = std::move(next);
  return out;
}

SeedRunResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                       std::ostream* log) {
  const Experiment exp = Experiment::prepare(cfg, seed);
  FederationState state = initial_state(exp);
  SeedRunResult result;
  result.seed = seed;
  result.manifest = exp.manifest;
  result.metrics.reserve(static_cast<std::size_t>(cfg.federation.rounds));
  for (std::int64_t r = 0; r < cfg.federation.rounds; ++r) {
    RoundOutcome out = run_round(exp, state, r);
    state = std::move(out.state);
    result.metrics.push_back(std::move(out.metrics));
    result.max_grad_norm = std::max(result.max_grad_norm, out.max_grad_norm);
    if (log) *log << out.server_log << '\n';
  }
  result.final_params = std::move(state.global);
  result.final_sk = std::move(state.sk);
  return result;
}

std::vector<std::uint64_t> resolved_seeds(const ExperimentConfig& cfg) {
  if (!cfg.seeds.empty()) return cfg.seeds;
  return {cfg.seed};
}

std::string metrics_filename(const std::string& method, std::uint64_t seed) {
  return "metrics_" + method + "_seed" + std::to_string(seed) + ".csv";
}

std::string checkpoint_filename(const std::string& method, std::uint64_t seed) {
  return "checkpoint_" + method + "_seed" + std::to_string(seed) + ".bin";
}

std::string manifest_filename(std::uint64_t seed) {
  return "manifest_seed" + std::to_string(seed) + ".json";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir, std::ostream* log) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + out_dir + ": " +
                      ec.message());

  const auto seeds = resolved_seeds(cfg);
  ExperimentResult result;
  result.runs.reserve(seeds.size());
  std::string summary_csv = "method,seed,final_acc,max_grad_norm\n";
  for (const auto seed : seeds) {
    SeedRunResult run = run_seed(cfg, seed, log);
    const auto base = fs::path(out_dir);
    write_metrics_csv((base / metrics_filename(cfg.method, seed)).string(),
                      run.metrics);
    write_manifest((base / manifest_filename(seed)).string(), run.manifest);
    {
      std::ostringstream blob(std::ios::binary);
      save_params(blob, run.final_params);
      write_file_atomic((base / checkpoint_filename(cfg.method, seed)).string(),
                        blob.str());
    }
    if (cfg.method_enum() == Method::FedSkc) {
      std::ostringstream blob(std::ios::binary);
      save_global_sk(blob, run.final_sk);
      write_file_atomic((base / sk_filename(cfg.method, seed)).string(),
                        blob.str());
    }
    summary_csv += cfg.method + "," + std::to_string(seed) + "," +
                   format_double(run.metrics.back().test_acc) + "," +
                   format_double(run.max_grad_norm) + "\n";
    result.runs.push_back(std::move(run));
  }

  double mean = 0.0;
  for (const auto& run : result.runs) mean += run.metrics.back().test_acc;
  mean /= static_cast<double>(result.runs.size());
  double var = 0.0;
  for (const auto& run : result.runs) {
    const double d = run.metrics.back().test_acc - mean;
    var += d * d;
  }
  var /= static_cast<double>(result.runs.size());
  result.final_acc_mean = mean;
  result.final_acc_std = std::sqrt(var);

  write_file_atomic((fs::path(out_dir) / "summary.csv").string(), summary_csv);
  if (log) {
    *log << "summary: method=" << cfg.method << " seeds=" << seeds.size()
         << " final_acc mean " << format_double(result.final_acc_mean)
         << " std " << format_double(result.final_acc_std)
         << " (population); max batch-gradient norm across runs is a rough "
            "diagnostic, not a certified bound\n";
  }
  return result;
}

}  // namespace fedsim
