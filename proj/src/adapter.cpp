#include "adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "error.hpp"
#include "parallel.hpp"
#include "textio.hpp"

namespace perfmap {

namespace {

std::string substitute(const std::string& tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string::npos) {
        auto it = vars.find(tmpl.substr(i + 1, close - i - 1));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

// Temporary file that deletes itself.
class TempFile {
 public:
  explicit TempFile(const std::string& content) {
    char name[] = "/tmp/perfmap_cfg_XXXXXX";
    int fd = mkstemp(name);
    if (fd < 0) fail(Errc::io_error, "mkstemp failed");
    path_ = name;
    ssize_t n = ::write(fd, content.data(), content.size());
    ::close(fd);
    if (n != ssize_t(content.size())) fail(Errc::io_error, "short write to " + path_);
  }
  ~TempFile() { ::unlink(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ProcessOutput {
  int exit_code = -1;
  bool timed_out = false;
  std::string stdout_text;
};

// Run a shell command with a wall-clock deadline; the whole process group is
// killed on timeout.
ProcessOutput run_command(const std::string& command, double timeout_s) {
  int pipefd[2];
  if (pipe(pipefd) != 0) fail(Errc::io_error, "pipe failed");
  pid_t pid = fork();
  if (pid < 0) fail(Errc::io_error, "fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(pipefd[1], STDOUT_FILENO);
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  ::close(pipefd[1]);

  ProcessOutput out;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  char buf[4096];
  bool open = true;
  while (open) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                      std::chrono::steady_clock::now());
    int wait_ms = int(std::max<long long>(0, left.count()));
    struct pollfd pfd = {pipefd[0], POLLIN, 0};
    int pr = poll(&pfd, 1, std::min(wait_ms, 200));
    if (pr > 0) {
      ssize_t n = ::read(pipefd[0], buf, sizeof(buf));
      if (n > 0)
        out.stdout_text.append(buf, std::size_t(n));
      else
        open = false;  // EOF (child exited or closed stdout)
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      out.timed_out = true;
      kill(-pid, SIGKILL);
      break;
    }
  }
  // drain anything left after EOF/kill
  ssize_t n;
  while ((n = ::read(pipefd[0], buf, sizeof(buf))) > 0) out.stdout_text.append(buf, std::size_t(n));
  ::close(pipefd[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

}  // namespace

RunResult SubprocessAdapter::run(const InstanceFeatures& instance,
                                 const std::map<std::string, std::string>& assignment,
                                 std::uint64_t seed, double time_limit_s) const {
  std::string config_text;
  for (const auto& [name, value] : assignment) config_text += name + "=" + value + "\n";
  TempFile config_file(config_text);
  std::map<std::string, std::string> vars = {
      {"instance", instance.instance_id},
      {"config_file", config_file.path()},
      {"seed", std::to_string(seed)},
      {"time_limit", format_double(time_limit_s)},
  };
  std::string command = substitute(template_, vars);
  ProcessOutput proc = run_command(command, time_limit_s + grace_s_);

  RunResult result;
  if (proc.timed_out) {
    result.error = "timed out after " + format_double(time_limit_s + grace_s_) + "s";
    return result;
  }
  if (proc.exit_code != 0) {
    result.error = "exit code " + std::to_string(proc.exit_code);
    return result;
  }
  // last stdout line starting with PERF=
  std::istringstream lines(proc.stdout_text);
  std::string line, perf_line;
  while (std::getline(lines, line)) {
    if (line.rfind("PERF=", 0) == 0) perf_line = line;
  }
  if (perf_line.empty()) {
    result.error = "no PERF= line in output";
    return result;
  }
  std::istringstream fields(perf_line);
  std::string field;
  bool have_perf = false;
  while (fields >> field) {
    auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    std::string key = field.substr(0, eq);
    std::string val = field.substr(eq + 1);
    try {
      if (key == "PERF") {
        result.perf = parse_double(val);
        have_perf = true;
      } else if (key == "INCUMBENT") {
        result.incumbent = parse_double(val);
      } else if (key == "BOUND") {
        result.bound = parse_double(val);
      }
    } catch (const Error&) {
      result.error = "unparseable field '" + field + "'";
      return result;
    }
  }
  if (!have_perf) {
    result.error = "no PERF= value in output";
    return result;
  }
  result.ok = true;
  return result;
}

namespace {

struct JournalEntry {
  bool ok = false;
  double perf = 0.0;
  std::optional<double> incumbent;
  std::optional<double> bound;
};

std::string journal_key(const std::string& instance_id, std::size_t config_index, std::uint64_t seed) {
  return instance_id + "," + std::to_string(config_index) + "," + std::to_string(seed);
}

std::string journal_line(const std::string& key, const JournalEntry& e) {
  std::string payload = key + "," + (e.ok ? "1" : "0") + "," + format_double(e.perf) + "," +
                        opt_field(e.incumbent) + "," + opt_field(e.bound);
  return payload + "," + std::to_string(fnv1a(payload));
}

// Lines that fail the checksum (e.g. a torn final line after a crash) are
// skipped; those runs simply repeat.
std::map<std::string, JournalEntry> load_journal(const std::string& path, const std::string& header) {
  std::map<std::string, JournalEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (line != header)
        fail(Errc::bad_config, "journal " + path + " belongs to a different collection setup; delete it to restart");
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != 8) continue;
    std::string payload = line.substr(0, line.rfind(','));
    if (std::to_string(fnv1a(payload)) != fields[7]) continue;
    JournalEntry e;
    try {
      e.ok = fields[3] == "1";
      e.perf = parse_double(fields[4]);
      e.incumbent = parse_opt_field(fields[5]);
      e.bound = parse_opt_field(fields[6]);
    } catch (const Error&) {
      continue;
    }
    out[fields[0] + "," + fields[1] + "," + fields[2]] = e;
  }
  return out;
}

}  // namespace

Dataset collect(const PerformanceSource& source, const InstanceSet& instances,
                const ConfigurationSpace& space, const CollectOptions& options, CollectStats* stats) {
  if (options.seeds.empty()) fail(Errc::bad_config, "collect: seed list is empty");
  if (instances.instances.empty()) fail(Errc::empty_input, "collect: no instances");
  std::vector<Configuration> configs = enumerate_all(space, options.enum_budget);
  if (configs.empty()) fail(Errc::empty_space, "collect: the configuration space has no feasible point");

  std::string header = "# perfmap journal v1 space=" + std::to_string(fnv1a(space.to_json_text())) +
                       " seeds=" + std::to_string(options.seeds.size());
  std::map<std::string, JournalEntry> done;
  std::ofstream journal;
  std::mutex journal_mu;
  if (!options.journal_path.empty()) {
    done = load_journal(options.journal_path, header);
    bool fresh = done.empty();
    journal.open(options.journal_path, std::ios::app);
    if (!journal) fail(Errc::io_error, "cannot open journal " + options.journal_path);
    if (fresh) {
      std::ifstream probe(options.journal_path);
      std::string l;
      if (!std::getline(probe, l)) journal << header << "\n" << std::flush;
    }
  }

  const std::size_t n_inst = instances.instances.size();
  const std::size_t n_conf = configs.size();
  const std::size_t n_seed = options.seeds.size();
  const std::size_t total = n_inst * n_conf * n_seed;
  const double sentinel = 10.0 * options.threshold;

  std::vector<JournalEntry> results(total);
  std::size_t failures = 0, resumed = 0;
  std::mutex count_mu;
  parallel_for(total, options.jobs, [&](std::size_t flat) {
    std::size_t s = flat % n_seed;
    std::size_t c = (flat / n_seed) % n_conf;
    std::size_t i = flat / (n_seed * n_conf);
    const InstanceFeatures& inst = instances.instances[i];
    std::string key = journal_key(inst.instance_id, c, options.seeds[s]);
    auto it = done.find(key);
    if (it != done.end()) {
      results[flat] = it->second;
      std::lock_guard<std::mutex> lock(count_mu);
      ++resumed;
      if (!it->second.ok) ++failures;
      return;
    }
    RunResult run = source.run(inst, configs[c].assignment, options.seeds[s], options.time_limit_s);
    JournalEntry e;
    e.ok = run.ok;
    e.perf = run.ok ? run.perf : sentinel;
    e.incumbent = run.incumbent;
    e.bound = run.bound;
    results[flat] = e;
    if (!options.journal_path.empty()) {
      std::lock_guard<std::mutex> lock(journal_mu);
      journal << journal_line(key, e) << "\n" << std::flush;
    }
    if (!run.ok) {
      std::lock_guard<std::mutex> lock(count_mu);
      ++failures;
    }
  });

  Dataset ds;
  ds.feature_names = instances.schema;
  ds.config_columns = space.bit_names();
  for (const InstanceFeatures& inst : instances.instances) ds.features[inst.instance_id] = inst;
  for (std::size_t i = 0; i < n_inst; ++i) {
    const InstanceFeatures& inst = instances.instances[i];
    for (std::size_t c = 0; c < n_conf; ++c) {
      PerformanceRecord rec;
      rec.instance_id = inst.instance_id;
      rec.encoding = configs[c].encoding;
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t s = 0; s < n_seed; ++s) {
        const JournalEntry& e = results[(i * n_conf + c) * n_seed + s];
        rec.seed_values.push_back(e.perf);
        order.emplace_back(e.perf, s);
      }
      rec.p_raw = aggregate_seeds(rec.seed_values);
      // gaps come from the run attaining the (lower-)middle order statistic
      std::sort(order.begin(), order.end());
      const JournalEntry& mid = results[(i * n_conf + c) * n_seed + order[(n_seed - 1) / 2].second];
      if (inst.opt_value && mid.ok) {
        GapResult gaps = compute_gaps(*inst.opt_value, mid.incumbent, mid.bound, options.gap_eps);
        rec.primal_gap = gaps.primal;
        rec.dual_gap = gaps.dual;
      }
      ds.records.push_back(std::move(rec));
    }
  }
  if (stats) {
    stats->runs = total;
    stats->failures = failures;
    stats->resumed = resumed;
  }
  return ds;
}

}  // namespace perfmap
