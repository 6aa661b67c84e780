// Stand-in for ffmpeg: accepts the harness's argument layout and writes a
// short 16 kHz mono s16 WAV to the last argument.
//
// Leading options (consumed before the ffmpeg-style arguments):
//   --counter FILE   append one line per invocation
//   --fail           print a diagnostic to stderr and exit 3
//   --wrong-format   write 44.1 kHz stereo instead
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

void put16(std::ofstream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string counter;
  bool fail = false;
  bool wrong_format = false;
  std::size_t i = 0;
  for (; i < args.size(); ++i) {
    if (args[i] == "--counter" && i + 1 < args.size()) {
      counter = args[++i];
    } else if (args[i] == "--fail") {
      fail = true;
    } else if (args[i] == "--wrong-format") {
      wrong_format = true;
    } else {
      break;
    }
  }
  if (!counter.empty()) std::ofstream(counter, std::ios::app) << "run\n";
  if (fail) {
    std::cerr << "fake_media_tool: invalid data found when processing input\n";
    return 3;
  }
  std::string input;
  for (std::size_t k = i; k + 1 < args.size(); ++k) {
    if (args[k] == "-i") input = args[k + 1];
  }
  if (input.empty() || args.empty()) {
    std::cerr << "fake_media_tool: no input\n";
    return 2;
  }
  std::ifstream probe(input, std::ios::binary);
  if (!probe) {
    std::cerr << "fake_media_tool: " << input << ": No such file or directory\n";
    return 1;
  }

  const std::uint16_t channels = wrong_format ? 2 : 1;
  const std::uint32_t rate = wrong_format ? 44100 : 16000;
  const std::uint32_t samples = 1600;
  const std::uint32_t data_bytes = samples * channels * 2;
  std::ofstream out(args.back(), std::ios::binary | std::ios::trunc);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put32(out, 16);
  put16(out, 1);
  put16(out, channels);
  put32(out, rate);
  put32(out, rate * channels * 2);
  put16(out, static_cast<std::uint16_t>(channels * 2));
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  const std::vector<char> silence(data_bytes, 0);
  out.write(silence.data(), static_cast<std::streamsize>(silence.size()));
  return out ? 0 : 1;
}
