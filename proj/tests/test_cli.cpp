#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string command = std::string(RATESYNC_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  std::array<char, 4096> buffer;
  while (std::size_t got = std::fread(buffer.data(), 1, buffer.size(), pipe)) {
    result.output.append(buffer.data(), got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ratesync_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

int count_data_rows(const std::string& csv) {
  int rows = 0;
  std::istringstream in(csv);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    ++rows;
  }
  return rows;
}

const char* kAllocateConfig = R"([session]
per_user_budget = 1e7
[users]
num_users = 2
requested_sizes = crew
gain_to_noise = 1.0, 1.0
[run]
seed = 11
)";

}  // namespace

TEST_CASE("cli: fit reproduces the published duck parameters") {
  const fs::path dir = fresh_dir("fit");
  const RunResult r = run_cli("fit " RATESYNC_DATA_DIR "/duck.csv --normalization b --out " +
                              dir.string());
  INFO(r.output);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("manifest command=fit") != std::string::npos);
  const std::string csv = slurp(dir / "model.csv");
  CHECK(csv.rfind("video,alpha1,alpha2,alpha3,reference_rate,mse,normalization\n", 0) == 0);
  // alpha1 within 15% of 0.634
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::istringstream fields(row);
  std::string video, a1;
  std::getline(fields, video, ',');
  std::getline(fields, a1, ',');
  CHECK(video == "duck");
  CHECK(std::abs(std::stod(a1) - 0.634) <= 0.15 * 0.634);
}

TEST_CASE("cli: missing dataset exits with the i/o code") {
  const RunResult r = run_cli("fit /nonexistent/file.csv");
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: fit on exact synthetic data reaches machine-level mse") {
  const fs::path dir = fresh_dir("synth");
  std::ostringstream csv;
  csv << "rate_kbps,mos\n";
  for (double rate : {15.0, 40.0, 100.0, 250.0, 500.0, 1000.0}) {
    char row[64];
    std::snprintf(row, sizeof(row), "%.6f,%.12f\n", rate,
                  0.7 * std::log(300.0 * rate / 1000.0 + 1.0));
    csv << row;
  }
  write_file(dir / "synthetic.csv", csv.str());
  const RunResult r =
      run_cli("fit " + (dir / "synthetic.csv").string() + " --out " + dir.string());
  INFO(r.output);
  CHECK(r.exit_code == 0);
  const std::string model = slurp(dir / "model.csv");
  std::istringstream in(model);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::istringstream fields(row);
  std::string field;
  for (int i = 0; i <= 5; ++i) std::getline(fields, field, ',');
  CHECK(std::stod(field) < 1e-8);  // mse column
}

TEST_CASE("cli: symmetric allocation splits evenly and is labeled") {
  const fs::path dir = fresh_dir("alloc");
  write_file(dir / "scenario.ini", kAllocateConfig);
  const RunResult r = run_cli("allocate --config " + (dir / "scenario.ini").string() + " --out " +
                              dir.string());
  INFO(r.output);
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "allocation.csv");
  CHECK(count_data_rows(csv) == 2);
  CHECK(csv.find("# case=") != std::string::npos);

  // equal users receive equal sizes
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  }
  REQUIRE(rows.size() == 2);
  const auto field = [](const std::string& row, int index) {
    std::istringstream fields(row);
    std::string out;
    for (int i = 0; i <= index; ++i) std::getline(fields, out, ',');
    return out;
  };
  CHECK(field(rows[0], 4) == field(rows[1], 4));  // allocated_bits
}

TEST_CASE("cli: prior delays beyond the segment report the severe case") {
  const fs::path dir = fresh_dir("severe");
  write_file(dir / "scenario.ini", R"([session]
per_user_budget = 3e7
[users]
num_users = 2
requested_sizes = 1e8
gain_to_noise = 1.0, 1.2
prior_residual_delay = 12, 13
[qoe]
alpha1 = 0.802
alpha2 = 419.6
alpha3 = 1
)");
  const RunResult r = run_cli("allocate --config " + (dir / "scenario.ini").string() + " --out " +
                              dir.string());
  INFO(r.output);
  CHECK(r.output.find("case=severe") != std::string::npos);
  CHECK(slurp(dir / "allocation.csv").find("# case=severe") != std::string::npos);
}

TEST_CASE("cli: a dead channel is a config error") {
  const fs::path dir = fresh_dir("dead");
  write_file(dir / "scenario.ini", R"([session]
per_user_budget = 1e7
[users]
num_users = 2
requested_sizes = crew
gain_to_noise = 0.0, 1.0
)");
  const RunResult r = run_cli("allocate --config " + (dir / "scenario.ini").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("dead channel") != std::string::npos);
}

TEST_CASE("cli: unknown config keys are rejected") {
  const fs::path dir = fresh_dir("badkey");
  write_file(dir / "scenario.ini", "[users]\nnum_users = 1\nrequested_sizes = crew\ntypo = 1\n");
  const RunResult r = run_cli("allocate --config " + (dir / "scenario.ini").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("typo") != std::string::npos);
}

TEST_CASE("cli: simulate writes one row per segment and is reproducible") {
  const fs::path dir = fresh_dir("sim");
  write_file(dir / "scenario.ini", R"([session]
per_user_budget = 1.2e7
[users]
num_users = 2
requested_sizes = crew
[run]
scheme = proposed-adaptive
num_segments = 30
seed = 7
)");
  const std::string config = (dir / "scenario.ini").string();
  const RunResult r1 = run_cli("simulate --config " + config + " --out " + (dir / "a").string());
  INFO(r1.output);
  CHECK(r1.exit_code == 0);
  const std::string csv = slurp(dir / "a" / "traces.csv");
  CHECK(count_data_rows(csv) == 30);

  // adaptive runs keep every accumulated gap within the bound
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string field;
    for (int i = 0; i <= 3; ++i) std::getline(fields, field, ',');
    CHECK(std::stod(field) <= 3.001);
  }

  const RunResult r2 = run_cli("simulate --config " + config + " --out " + (dir / "b").string());
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir / "a" / "traces.csv") == slurp(dir / "b" / "traces.csv"));
}

TEST_CASE("cli: sweep emits one row per scheme and budget") {
  const fs::path dir = fresh_dir("sweep");
  write_file(dir / "scenario.ini", R"([session]
per_user_budget = 1e7
[users]
num_users = 2
requested_sizes = crew
[run]
seed = 3
)");
  const std::string config = (dir / "scenario.ini").string();
  const RunResult r = run_cli("sweep --config " + config +
                              " --budgets 2e6,8e6,3e7 --trials 8 --out " + dir.string());
  INFO(r.output);
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(count_data_rows(csv) == 9);

  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "scheme,budget,mean_qoe,se_qoe,mean_gap_s,se_gap_s");
  while (std::getline(in, line)) {
    if (line.rfind("min-delay,", 0) == 0) {
      std::istringstream fields(line);
      std::string field;
      for (int i = 0; i <= 4; ++i) std::getline(fields, field, ',');
      CHECK(field == "0");
    }
    if (line.rfind("proposed,", 0) == 0) {
      std::istringstream fields(line);
      std::string field;
      for (int i = 0; i <= 4; ++i) std::getline(fields, field, ',');
      CHECK(std::stod(field) <= 3.0);
    }
  }
}

TEST_CASE("cli: manifests carry a stable digest") {
  const fs::path dir = fresh_dir("digest");
  write_file(dir / "scenario.ini", kAllocateConfig);
  const std::string config = (dir / "scenario.ini").string();
  const RunResult r1 = run_cli("allocate --config " + config + " --out " + dir.string());
  const RunResult r2 = run_cli("allocate --config " + config + " --out " + dir.string());
  const auto digest_of = [](const std::string& text) {
    const auto pos = text.find("digest=");
    REQUIRE(pos != std::string::npos);
    return text.substr(pos, 23);
  };
  CHECK(digest_of(r1.output) == digest_of(r2.output));
  const RunResult r3 =
      run_cli("allocate --config " + config + " --seed 99 --out " + dir.string());
  CHECK(digest_of(r3.output) != digest_of(r1.output));
}
