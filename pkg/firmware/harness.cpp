// Parity harness for a generated street light controller.
//
// Build this file together with one generated controller source
// (see build.sh). The harness answers sensor frames over a line
// protocol: each stdin line carries the four input levels
// "I0 I1 I2 I3"; the response line carries the three discretized
// outputs followed by the three raw sigmoid outputs, full precision.
//
// The feedback input I0 comes from the frame itself (stateless mode),
// so every response is a pure function of its request line.

#include <iostream>
#include <sstream>
#include <string>

#include <cstdio>

// Globals and entry points defined by the generated controller source.
extern double previousListeningDecision;
extern double lightSensor;
extern double motionSensor;
extern double wirelessReceiver;

extern double transmitterSignal;
extern double listeningDecision;
extern double lightDecision;

extern double transmitterRaw;
extern double listeningRaw;
extern double lightRaw;

void makeDecisions(void);

// Fake hardware backing the controller's extern declarations. The parity
// loop writes the sensor globals directly and never calls getInputs(),
// but the symbols must exist for the controller to link unchanged.
static double stubLightSensor = 0.0;
static double stubMotionSensor = 0.0;
static double stubWirelessData = 0.0;

double readLightSensor(void) { return stubLightSensor; }
double readMotionSensor(void) { return stubMotionSensor; }
double receiveWirelessData(void) { return stubWirelessData; }
void sendWirelessData(double value) { (void)value; }
void writeLamp(double value) { (void)value; }

namespace {

bool onLattice(double value, bool binary) {
    if (value == 0.0 || value == 1.0) return true;
    return !binary && value == 0.5;
}

int failLine(long lineNumber, const std::string& line) {
    std::cerr << "line " << lineNumber << ": malformed frame: " << line << "\n";
    return 1;
}

}  // namespace

int main() {
    std::string line;
    long lineNumber = 0;
    while (std::getline(std::cin, line)) {
        ++lineNumber;
        std::istringstream in(line);
        double i0 = 0.0, i1 = 0.0, i2 = 0.0, i3 = 0.0;
        if (!(in >> i0 >> i1 >> i2 >> i3)) {
            return failLine(lineNumber, line);
        }
        std::string extra;
        if (in >> extra) {
            return failLine(lineNumber, line);
        }
        if (!onLattice(i0, true) || !onLattice(i1, false) ||
            !onLattice(i2, true) || !onLattice(i3, false)) {
            return failLine(lineNumber, line);
        }

        previousListeningDecision = i0;
        lightSensor = i1;
        motionSensor = i2;
        wirelessReceiver = i3;
        makeDecisions();

        std::printf("%.17g %.17g %.17g %.17g %.17g %.17g\n",
                    transmitterSignal, listeningDecision, lightDecision,
                    transmitterRaw, listeningRaw, lightRaw);
    }
    return 0;
}
