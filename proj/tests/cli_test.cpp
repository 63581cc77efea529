// Copyright 2026 The notegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support/fixtures.hpp"

namespace notegen {
namespace {

using testing_support::melody_file;
using testing_support::read_text;
using testing_support::TempDir;
using testing_support::write_bytes;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "notegen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  TempDir dir{"cli"};
  Workspace() {
    fs::create_directories(dir / "data");
    write_bytes(dir / "data/a.mid", midi::write_midi(melody_file(24, 96)));
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::vector<std::string> train_args(const std::string& tag, std::vector<std::string> extra = {}) const {
    std::vector<std::string> a{"train", "--data", path("data"), "--window", "4", "--hidden", "5", "--batch", "8",
                               "--out", path(tag + ".ngckpt"), "--metrics", path(tag + ".csv")};
    if (std::find(extra.begin(), extra.end(), "--epochs") == extra.end()) extra.insert(extra.end(), {"--epochs", "3"});
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }
};

TEST(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run({}).code, 2); }

TEST(Cli, HelpSucceeds) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train"), std::string::npos);
}

TEST(Cli, TrainRequiresData) {
  const auto r = run({"train", "--epochs", "2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
}

TEST(Cli, BadNumbersAreUsageErrors) {
  const Workspace ws;
  EXPECT_EQ(run(ws.train_args("x", {"--epochs", "0"})).code, 2);
  EXPECT_EQ(run(ws.train_args("x", {"--dropout", "1.5"})).code, 2);
  EXPECT_EQ(run(ws.train_args("x", {"--lr", "abc"})).code, 2);
  EXPECT_EQ(run(ws.train_args("x", {"--bogus"})).code, 2);
}

TEST(Cli, TrainWritesCheckpointAndMetrics) {
  const Workspace ws;
  const auto r = run(ws.train_args("m", {"--dropout", "0.5"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("epoch 1/3 loss "), std::string::npos);
  EXPECT_NE(r.out.find("epoch 3/3 loss "), std::string::npos);
  EXPECT_NE(r.out.find("corpus: 1 files, 20 samples, 3 batches/epoch"), std::string::npos);
  EXPECT_NE(r.out.find("checkpoint: " + ws.path("m.ngckpt")), std::string::npos);
  const Checkpoint c = load_checkpoint(ws.path("m.ngckpt"));
  EXPECT_EQ(c.epochs_completed, 3u);
  EXPECT_EQ(c.params.config.hidden, 5u);
  EXPECT_EQ(c.params.config.dropout_rate, 0.5);
  EXPECT_EQ(read_text(ws.path("m.csv")).rfind("scope,epoch,batch,loss,accuracy,wall_seconds\n", 0), 0u);
}

TEST(Cli, QuietSuppressesEpochLines) {
  const Workspace ws;
  const auto r = run(ws.train_args("q", {"--quiet"}));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.find("epoch "), std::string::npos);
}

TEST(Cli, SameSeedGivesIdenticalMetrics) {
  const Workspace ws;
  ASSERT_EQ(run(ws.train_args("a", {"--seed", "42"})).code, 0);
  ASSERT_EQ(run(ws.train_args("b", {"--seed", "42"})).code, 0);
  EXPECT_EQ(read_text(ws.path("a.csv")), read_text(ws.path("b.csv")));
  EXPECT_EQ(read_text(ws.path("a.ngckpt")), read_text(ws.path("b.ngckpt")));
}

TEST(Cli, ResumeContinuesToTotalEpochs) {
  const Workspace ws;
  ASSERT_EQ(run(ws.train_args("full", {"--epochs", "4"})).code, 0);
  ASSERT_EQ(run(ws.train_args("part", {"--epochs", "2"})).code, 0);
  const auto r = run(ws.train_args("part", {"--epochs", "4", "--resume"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text(ws.path("part.csv")), read_text(ws.path("full.csv")));
  EXPECT_EQ(read_text(ws.path("part.ngckpt")), read_text(ws.path("full.ngckpt")));
}

TEST(Cli, TrainFailuresExitOne) {
  Workspace ws;
  fs::remove(ws.dir / "data/a.mid");
  auto r = run(ws.train_args("e"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("EmptyCorpus"), std::string::npos);

  write_bytes(ws.dir / "data/short.mid", midi::write_midi(melody_file(3)));
  r = run(ws.train_args("e"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("NoSamples"), std::string::npos);
}

TEST(Cli, CorruptFileWarnsDuringTraining) {
  const Workspace ws;
  write_bytes(ws.dir / "data/broken.mid", {'M', 'T', 'h', 'd'});
  const auto r = run(ws.train_args("w"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning: "), std::string::npos);
  EXPECT_NE(r.err.find("broken.mid"), std::string::npos);
}

TEST(Cli, ConfigFileSuppliesDefaultsAndFlagsWin) {
  const Workspace ws;
  {
    std::ofstream cfg(ws.path("train.ini"));
    cfg << "[train]\ndata=" << ws.path("data") << "\nepochs=2\nwindow=4\nhidden=7\nbatch=8\nseed=3\n"
        << "out=" << ws.path("c.ngckpt") << "\nmetrics=" << ws.path("c.csv") << "\n";
  }
  auto r = run({"train", "--config", ws.path("train.ini"), "--hidden", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Checkpoint c = load_checkpoint(ws.path("c.ngckpt"));
  EXPECT_EQ(c.params.config.hidden, 6u);
  EXPECT_EQ(c.params.config.window, 4u);
  EXPECT_EQ(c.epochs_completed, 2u);

  {
    std::ofstream cfg(ws.path("bad.ini"));
    cfg << "[train]\ndata=" << ws.path("data") << "\nhidden_units=3\n";
  }
  r = run({"train", "--config", ws.path("bad.ini")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("hidden_units"), std::string::npos);

  r = run({"--config", ws.path("train.ini"), "train"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(run({"train", "--config", ws.path("missing.ini")}).code, 2);
}

TEST(Cli, GenerateFromSeedMidi) {
  const Workspace ws;
  ASSERT_EQ(run(ws.train_args("g")).code, 0);
  const auto r = run({"generate", "--model", ws.path("g.ngckpt"), "--seed-midi", ws.path("data/a.mid"), "--length",
                      "100", "--out", ws.path("gen.mid")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("notes: 100"), std::string::npos);
  const auto insp = run({"inspect", ws.path("gen.mid")});
  EXPECT_EQ(insp.code, 0);
  EXPECT_NE(insp.out.find("notes: 100\n"), std::string::npos);
  EXPECT_NE(insp.out.find("division: 96\n"), std::string::npos);
}

TEST(Cli, GenerateUsageErrors) {
  const Workspace ws;
  ASSERT_EQ(run(ws.train_args("g")).code, 0);
  const std::string model = ws.path("g.ngckpt"), out = ws.path("o.mid");
  EXPECT_EQ(run({"generate", "--model", model, "--out", out, "--length", "0"}).code, 2);
  EXPECT_EQ(run({"generate", "--out", out}).code, 2);
  EXPECT_EQ(run({"generate", "--model", model, "--out", out, "--seed-midi", ws.path("data/a.mid"), "--random-seed", "1"})
                .code,
            2);
  EXPECT_EQ(run({"generate", "--model", model, "--out", out, "--duration", "0"}).code, 2);
}

TEST(Cli, GenerateRandomSeedIsDeterministic) {
  const Workspace ws;
  ASSERT_EQ(run(ws.train_args("g")).code, 0);
  const std::string model = ws.path("g.ngckpt");
  ASSERT_EQ(run({"generate", "--model", model, "--out", ws.path("r1.mid"), "--random-seed", "7", "--length", "12"}).code, 0);
  ASSERT_EQ(run({"generate", "--model", model, "--out", ws.path("r2.mid"), "--random-seed", "7", "--length", "12"}).code, 0);
  EXPECT_EQ(read_text(ws.path("r1.mid")), read_text(ws.path("r2.mid")));
}

TEST(Cli, GenerateFailuresExitOne) {
  const Workspace ws;
  ASSERT_EQ(run(ws.train_args("g")).code, 0);
  write_bytes(ws.dir / "short.mid", midi::write_midi(melody_file(2)));
  auto r = run({"generate", "--model", ws.path("g.ngckpt"), "--seed-midi", ws.path("short.mid"), "--out", ws.path("o.mid")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("SeedTooShort"), std::string::npos);

  write_bytes(ws.dir / "junk.ngckpt", {'N', 'G'});
  r = run({"generate", "--model", ws.path("junk.ngckpt"), "--out", ws.path("o.mid")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("CorruptCheckpoint"), std::string::npos);
}

TEST(Cli, InspectSummaries) {
  const Workspace ws;
  write_bytes(ws.dir / "empty.mid", midi::write_midi(midi::MidiFile{0, 480, {{midi::end_of_track()}}}));
  auto r = run({"inspect", ws.path("empty.mid")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("notes: 0\n"), std::string::npos);
  EXPECT_NE(r.out.find("tempo: 500000\n"), std::string::npos);

  r = run({"inspect", ws.path("data/a.mid")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("format: 0\n"), std::string::npos);
  EXPECT_NE(r.out.find("notes: 24\n"), std::string::npos);
  EXPECT_NE(r.out.find("dt ticks: min 0, median 48, max 96\n"), std::string::npos);
}

TEST(Cli, InspectCorruptFileNamesTheError) {
  const Workspace ws;
  write_bytes(ws.dir / "bad.mid", {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 3, 0, 1, 1, 224});
  auto r = run({"inspect", ws.path("bad.mid")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("BadHeader"), std::string::npos);

  write_bytes(ws.dir / "trunc.mid", {'M', 'T', 'h', 'd', 0, 0});
  r = run({"inspect", ws.path("trunc.mid")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error: "), std::string::npos);

  EXPECT_EQ(run({"inspect", ws.path("missing.mid")}).code, 1);
  EXPECT_EQ(run({"inspect"}).code, 2);
}

}  // namespace
}  // namespace notegen
