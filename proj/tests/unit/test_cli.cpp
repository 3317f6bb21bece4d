#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lnprobe/cli.hpp"
#include "lnprobe/embstore.hpp"
#include "scratch.hpp"

using namespace lnprobe;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "lnprobe");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string p(const fs::path& path) { return path.string(); }

// synth -> pool for every language; returns the sentence-vector paths.
std::vector<std::string> pooled_corpus(const fs::path& dir, const std::string& langs, int sentences) {
    REQUIRE(run({"synth", "--languages", langs, "--sentences", std::to_string(sentences), "--dim", "16", "--output",
                 p(dir / "tok")})
                .code == 0);
    std::vector<std::string> out;
    std::stringstream ss(langs);
    std::string l;
    while (std::getline(ss, l, ',')) {
        const auto sv = p(dir / (l + ".sv"));
        REQUIRE(run({"pool", "--input", p(dir / "tok" / (l + ".memb")), "--output", sv}).code == 0);
        out.push_back(sv);
    }
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"pool", "--input", "x"}).code == cli::kExitUsage);
    CHECK(run({"pool", "--input", "x", "--output", "y", "--pooling", "max"}).code == cli::kExitUsage);
    CHECK(run({"retrieve", "--input", "a", "--format", "xml"}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("exit code mapping") {
    CHECK(cli::exit_code_for(ErrorKind::usage) == 2);
    CHECK(cli::exit_code_for(ErrorKind::format) == 3);
    CHECK(cli::exit_code_for(ErrorKind::corruption) == 3);
    CHECK(cli::exit_code_for(ErrorKind::validation) == 3);
    CHECK(cli::exit_code_for(ErrorKind::io) == 3);
    CHECK(cli::exit_code_for(ErrorKind::numeric) == 4);
    CHECK(cli::exit_code_for(ErrorKind::training) == 4);
}

TEST_CASE("pool") {
    const auto dir = scratch_dir("cli_pool");
    REQUIRE(run({"synth", "--languages", "en,de", "--sentences", "1000", "--dim", "4", "--output", p(dir)}).code == 0);
    const auto r = run({"pool", "--input", p(dir / "en.memb"), "--output", p(dir / "en.sv"), "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["records"] == 1000);
    const auto tokens = read_dump(dir / "en.memb");
    const auto pooled = read_dump(dir / "en.sv");
    REQUIRE(pooled.size() == 1000);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto row = tokens.tokens()[i].row(0);
        CHECK(pooled.sentences()[i].vector == Vector(row.begin(), row.end()));
    }

    const auto cls = run({"pool", "--input", p(dir / "en.memb"), "--pooling", "cls", "--output", p(dir / "c.sv")});
    CHECK(cls.code == cli::kExitData);
    CHECK(cls.err.find("en-000000") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "c.sv"));

    CHECK(run({"pool", "--input", p(dir / "missing.memb"), "--output", p(dir / "m.sv")}).code == cli::kExitData);
}

TEST_CASE("retrieve on identical inputs reports 1.0") {
    const auto dir = scratch_dir("cli_retrieve_self");
    const auto sv = pooled_corpus(dir, "en,de", 20);
    // Same vectors under two language tags.
    auto set = read_dump(sv[0]);
    for (auto& s : set.sentences()) s.language = "xx";
    write_dump(set, dir / "xx.sv");
    const auto r = run({"retrieve", "--input", sv[0], p(dir / "xx.sv"), "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["mode_average"]["plain"] == 1.0);
}

TEST_CASE("full synthetic pipeline: centering helps") {
    const auto dir = scratch_dir("cli_pipeline");
    const auto sv = pooled_corpus(dir, "cs,de,en", 100);
    std::vector<std::string> args{"centroids", "--output", p(dir / "cent.memb"), "--input"};
    args.insert(args.end(), sv.begin(), sv.end());
    REQUIRE(run(args).code == 0);

    std::vector<std::string> centered;
    for (const auto& s : sv) {
        centered.push_back(s + ".c");
        REQUIRE(run({"center", "--input", s, "--centroids", p(dir / "cent.memb"), "--output", centered.back()}).code == 0);
    }
    std::vector<std::string> plain_args{"retrieve", "--format", "json", "--input"};
    plain_args.insert(plain_args.end(), sv.begin(), sv.end());
    const auto plain = run(plain_args);
    std::vector<std::string> cent_args{"retrieve", "--format", "json", "--input"};
    cent_args.insert(cent_args.end(), centered.begin(), centered.end());
    const auto cent = run(cent_args);
    REQUIRE(plain.code == 0);
    REQUIRE(cent.code == 0);
    const double a = nlohmann::json::parse(plain.out)["mode_average"]["plain"];
    const double b = nlohmann::json::parse(cent.out)["mode_average"]["plain"];
    CHECK(b >= a);

    std::vector<std::string> mode_args{"retrieve", "--mode", "centered", "--centroids", p(dir / "cent.memb"),
                                       "--format", "json", "--input"};
    mode_args.insert(mode_args.end(), sv.begin(), sv.end());
    const auto via_mode = run(mode_args);
    REQUIRE(via_mode.code == 0);
    CHECK(nlohmann::json::parse(via_mode.out)["mode_average"]["centered"] == b);

    std::vector<std::string> missing{"retrieve", "--mode", "projected", "--input"};
    missing.insert(missing.end(), sv.begin(), sv.end());
    CHECK(run(missing).code == cli::kExitUsage);
}

TEST_CASE("align and align-eval") {
    const auto dir = scratch_dir("cli_align");
    REQUIRE(run({"synth", "--languages", "en,de", "--sentences", "5", "--tokens", "4", "--output", p(dir)}).code == 0);
    {
        std::ofstream g(dir / "gold.txt");
        for (int i = 0; i < 5; ++i) g << "0-0 1-1 2-2 3-3\n";
    }
    const auto r = run({"align", "--source", p(dir / "en.memb"), "--target", p(dir / "de.memb"), "--gold",
                        p(dir / "gold.txt"), "--output", p(dir / "links.txt")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("corpus\t1.000000\t1.000000\t1.000000") != std::string::npos);
    const auto ev = run({"align-eval", "--pred", p(dir / "gold.txt"), "--gold", p(dir / "gold.txt")});
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("corpus\t1.000000\t1.000000\t1.000000") != std::string::npos);

    {
        std::ofstream g(dir / "short.txt");
        g << "0-0\n";
    }
    CHECK(run({"align-eval", "--pred", p(dir / "gold.txt"), "--gold", p(dir / "short.txt")}).code == cli::kExitData);
    CHECK(run({"align", "--source", p(dir / "en.memb"), "--target", p(dir / "de.memb"), "--gold",
               p(dir / "short.txt"), "--output", p(dir / "l2.txt")})
              .code == cli::kExitData);
    CHECK_FALSE(fs::exists(dir / "l2.txt"));

    const auto tune = run({"tune-distortion", "--source", p(dir / "en.memb"), "--target", p(dir / "de.memb"),
                           "--gold", p(dir / "gold.txt"), "--grid", "0.5,0,1"});
    REQUIRE(tune.code == 0);
    CHECK(tune.out.find("best\t0\n") != std::string::npos);
    CHECK(run({"tune-distortion", "--source", p(dir / "en.memb"), "--target", p(dir / "de.memb"), "--gold",
               p(dir / "gold.txt"), "--grid", "0,abc"})
              .code == cli::kExitUsage);
}

TEST_CASE("langid and cluster commands") {
    const auto dir = scratch_dir("cli_langid");
    const auto sv = pooled_corpus(dir, "cs,de,en,es", 50);
    std::vector<std::string> train{"langid-train", "--output", p(dir / "lid.memb"), "--train"};
    train.insert(train.end(), sv.begin(), sv.end());
    train.push_back("--valid");
    train.insert(train.end(), sv.begin(), sv.end());
    REQUIRE(run(train).code == 0);
    std::vector<std::string> eval{"langid-eval", "--model", p(dir / "lid.memb"), "--format", "json", "--input"};
    eval.insert(eval.end(), sv.begin(), sv.end());
    const auto e = run(eval);
    REQUIRE(e.code == 0);
    CHECK(nlohmann::json::parse(e.out)["accuracy"] == 1.0);

    std::vector<std::string> cents{"centroids", "--output", p(dir / "cent.memb"), "--input"};
    cents.insert(cents.end(), sv.begin(), sv.end());
    REQUIRE(run(cents).code == 0);
    {
        std::ofstream f(dir / "fam.tsv");
        f << "cs\tSlavic\nde\tGermanic\nen\tGermanic\nes\tRomance\n";
    }
    const auto c = run({"cluster", "--centroids", p(dir / "cent.memb"), "--families", p(dir / "fam.tsv"),
                        "--min-family-size", "1", "--output", p(dir / "cl")});
    REQUIRE(c.code == 0);
    CHECK(fs::exists(dir / "cl.assignments.tsv"));
    CHECK(fs::exists(dir / "cl.coords.tsv"));
    const auto score = nlohmann::json::parse(slurp(dir / "cl.score.json"));
    CHECK(score["clusters"] == 3);
    CHECK(score["languages"] == 4);
}

TEST_CASE("qe command") {
    const auto dir = scratch_dir("cli_qe");
    const auto sv = pooled_corpus(dir, "en,de", 40);
    {
        std::ofstream f(dir / "qe.tsv");
        f << "source_id\ttarget_id\thter\n";
        for (int i = 0; i < 40; ++i) f << "en-" << std::string(6 - std::to_string(i).size(), '0') << i << "\tde-"
                                       << std::string(6 - std::to_string(i).size(), '0') << i << "\t" << (i % 7) * 0.1
                                       << "\n";
    }
    const auto plain = run({"qe", "--source", sv[0], "--target", sv[1], "--test", p(dir / "qe.tsv")});
    CHECK(plain.code == 0);
    CHECK(run({"qe", "--source", sv[0], "--target", sv[1], "--test", p(dir / "qe.tsv"), "--variant", "centered"})
              .code == cli::kExitUsage);
    const auto reg = run({"qe", "--source", sv[0], "--target", sv[1], "--test", p(dir / "qe.tsv"), "--train",
                          p(dir / "qe.tsv"), "--variant", "full", "--format", "json", "--model-output",
                          p(dir / "qe.memb")});
    REQUIRE(reg.code == 0);
    CHECK(nlohmann::json::parse(reg.out)["parameters"] == 32 * 256 + 256 + 256 + 1);
    CHECK(fs::exists(dir / "qe.memb"));
}

TEST_CASE("synth determinism and validation") {
    const auto a = scratch_dir("cli_synth_a");
    const auto b = scratch_dir("cli_synth_b");
    REQUIRE(run({"synth", "--sentences", "30", "--seed", "7", "--output", p(a)}).code == 0);
    REQUIRE(run({"synth", "--sentences", "30", "--seed", "7", "--output", p(b)}).code == 0);
    for (const auto& l : {"cs", "de", "en", "es", "fr", "ru"}) {
        const std::string f = std::string(l) + ".memb";
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(run({"synth", "--languages", "en", "--output", p(a / "x")}).code == cli::kExitUsage);
}
