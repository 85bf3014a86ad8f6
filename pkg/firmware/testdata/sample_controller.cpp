/* Smart street light controller (generated; do not edit). */

#include <math.h>

/* Hardware boundary, provided by the enclosing firmware. */
extern double readLightSensor(void);
extern double readMotionSensor(void);
extern double receiveWirelessData(void);
extern void sendWirelessData(double value);
extern void writeLamp(double value);

/* Evolved network parameters. */
double weightsH0[4] = { 1.2, -0.8, 1.6, -0.5 };
double weightsH1[4] = { 1.6, -0.8, 1.5, -0.3 };
double weightsTransmitterOutput[2] = { -0.6, -0.2 };
double weightsListeningDecision[2] = { -0.9, -0.7 };
double weightsLightDecision[2] = { 1.7, -0.4 };

/* Discretization ladder. */
double lightThreshold1 = 0.7075786395585435;
double lightThreshold2 = 0.8828148023659487;
double transmitterThreshold1 = 0.38154121886840475;
double transmitterThreshold2 = 0.700656169943774;
double listeningThreshold = 0.27444233416541125;
int listeningHighIsOne = 0;

/* Sensor snapshot and decisions. */
double previousListeningDecision = 0.0;
double lightSensor = 0.0;
double motionSensor = 0.0;
double wirelessReceiver = 0.0;

double transmitterSignal = 0.0;
double listeningDecision = 0.0;
double lightDecision = 0.0;

double transmitterRaw = 0.0;
double listeningRaw = 0.0;
double lightRaw = 0.0;

double fSigmoide(double x) {
    double output = 1 / (1 + exp(-x));
    return output;
}

double calculateHiddenUnitOutput(double w[4]) {
    double H = previousListeningDecision * w[0] + lightSensor * w[1]
        + motionSensor * w[2] + wirelessReceiver * w[3];
    double HOutput = fSigmoide(H);
    return HOutput;
}

double calculateOutputDecisions(double w[2], double h0, double h1) {
    double outputSum = h0 * w[0] + h1 * w[1];
    double output = fSigmoide(outputSum);
    return output;
}

double discretizeTriLevel(double raw, double threshold1, double threshold2) {
    if (raw > threshold2) {
        return 1.0;
    }
    if (raw > threshold1) {
        return 0.5;
    }
    return 0.0;
}

double discretizeListening(double raw) {
    if (listeningHighIsOne) {
        return raw >= listeningThreshold ? 1.0 : 0.0;
    }
    return raw <= listeningThreshold ? 1.0 : 0.0;
}

/* Data collection: refresh the sensor snapshot and the feedback input. */
void getInputs(void) {
    lightSensor = readLightSensor();
    motionSensor = readMotionSensor();
    previousListeningDecision = listeningDecision;
    if (listeningDecision == 1) {
        wirelessReceiver = receiveWirelessData();
    } else {
        wirelessReceiver = 0;
    }
}

/* Decision making: forward pass plus the threshold ladder. */
void makeDecisions(void) {
    double H0 = calculateHiddenUnitOutput(weightsH0);
    double H1 = calculateHiddenUnitOutput(weightsH1);
    transmitterRaw = calculateOutputDecisions(weightsTransmitterOutput, H0, H1);
    listeningRaw = calculateOutputDecisions(weightsListeningDecision, H0, H1);
    lightRaw = calculateOutputDecisions(weightsLightDecision, H0, H1);
    transmitterSignal = discretizeTriLevel(transmitterRaw,
        transmitterThreshold1, transmitterThreshold2);
    listeningDecision = discretizeListening(listeningRaw);
    lightDecision = discretizeTriLevel(lightRaw,
        lightThreshold1, lightThreshold2);
}

/* Action enforcement. */
void setOutputs(void) {
    sendWirelessData(transmitterSignal);
    writeLamp(lightDecision);
}

void runControlCycle(void) {
    getInputs();
    makeDecisions();
    setOutputs();
}
