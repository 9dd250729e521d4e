#include "midispace/pianoroll.hpp"

#include <algorithm>
#include <sstream>

#include "midispace/errors.hpp"

namespace midispace {

namespace {

constexpr char kFamilyChars[] = "0123456789ABCDEFG";  // 17 classes

// one color per GM family block, drums last
constexpr const char* kFamilyColors[17] = {
    "#4363d8", "#3cb44b", "#e6194b", "#ffe119", "#f58231", "#911eb4",
    "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
    "#9a6324", "#fffac8", "#800000", "#aaffc3", "#808080",
};

struct Cell {
  int family = -1;  // -1 empty
  bool onset = false;
};

struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<Cell> cells;

  Cell& at(int row, int col) { return cells[static_cast<std::size_t>(row) * cols + col]; }
};

Grid build_grid(const std::vector<Measure>& measures, const RenderOptions& options) {
  Grid g;
  g.rows = options.strip_octaves ? 12 : 128;
  g.cols = static_cast<int>(measures.size()) * kStepsPerMeasure;
  g.cells.assign(static_cast<std::size_t>(g.rows) * std::max(g.cols, 1), Cell{});
  if (g.cols == 0) return g;

  for (std::size_t i = 0; i < measures.size(); ++i) {
    const int offset = static_cast<int>(i) * kStepsPerMeasure;
    for (const auto& content : decode_measure(measures[i])) {
      if (options.strip_drums && content.program == kDrumProgram) continue;
      const int family = instrument_family(content.program);
      for (const auto& n : content.notes) {
        const int pitch = options.strip_octaves ? n.pitch % 12 : n.pitch;
        const int row = g.rows - 1 - pitch;  // high pitches on top
        for (int s = 0; s < n.duration; ++s) {
          Cell& c = g.at(row, offset + n.onset + s);
          c.family = family;
          c.onset = s == 0;
        }
      }
    }
  }
  return g;
}

std::string render_text(Grid& g) {
  std::string out;
  out.reserve(static_cast<std::size_t>(g.rows) * (g.cols + 5));
  for (int row = 0; row < g.rows; ++row) {
    const int pitch = g.rows - 1 - row;
    const std::string label = std::to_string(pitch);
    out.append(3 - label.size(), ' ');
    out += label;
    out += '|';
    for (int col = 0; col < g.cols; ++col) {
      const Cell& c = g.at(row, col);
      out += c.family < 0 ? '.' : c.onset ? kFamilyChars[c.family] : '-';
    }
    out += '\n';
  }
  return out;
}

std::string render_svg(Grid& g) {
  constexpr int kCell = 8;
  const int width = std::max(g.cols, 1) * kCell;
  const int height = g.rows * kCell;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  for (int row = 0; row < g.rows; ++row) {
    int col = 0;
    while (col < g.cols) {
      const Cell& c = g.at(row, col);
      if (c.family < 0) {
        ++col;
        continue;
      }
      // one rect per onset-started run of the same family
      int end = col + 1;
      while (end < g.cols && g.at(row, end).family == c.family && !g.at(row, end).onset) ++end;
      out << "<rect x=\"" << col * kCell << "\" y=\"" << row * kCell << "\" width=\""
          << (end - col) * kCell << "\" height=\"" << kCell << "\" fill=\""
          << kFamilyColors[c.family] << "\"/>\n";
      col = end;
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

RenderFormat parse_render_format(const std::string& name) {
  if (name == "svg") return RenderFormat::Svg;
  if (name == "text") return RenderFormat::Text;
  throw ConfigError("unknown render format: " + name);
}

int instrument_family(int program) {
  if (program == kDrumProgram) return 16;
  if (program < 0 || program > 127) throw DataError("program out of range");
  return program / 8;
}

std::string render_measures(const std::vector<Measure>& measures,
                            const RenderOptions& options) {
  Grid g = build_grid(measures, options);
  return options.format == RenderFormat::Text ? render_text(g) : render_svg(g);
}

std::vector<RenderedNote> parse_text_grid(const std::string& text) {
  std::vector<RenderedNote> notes;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto bar = line.find('|');
    if (bar == std::string::npos) throw ParseError("grid row has no label separator");
    int pitch = 0;
    try {
      pitch = std::stoi(line.substr(0, bar));
    } catch (const std::exception&) {
      throw ParseError("grid row has a bad pitch label");
    }
    bool open = false;
    for (std::size_t col = bar + 1; col < line.size(); ++col) {
      const char c = line[col];
      const int step = static_cast<int>(col - bar - 1);
      if (c == '.') {
        open = false;
      } else if (c == '-') {
        if (!open) throw ParseError("grid continuation without an onset", col);
        ++notes.back().duration;
      } else {
        const char* pos = std::char_traits<char>::find(kFamilyChars, 17, c);
        if (!pos) throw ParseError("unknown grid cell", col);
        notes.push_back({pitch, step, 1, static_cast<int>(pos - kFamilyChars)});
        open = true;
      }
    }
  }
  return notes;
}

}  // namespace midispace
