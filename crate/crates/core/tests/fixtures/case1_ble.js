Page({
  addService: function (e) {
    // e carries the peripheral options
    this.status = "init";
    var a = this.data.server;
    if (!a) {
      return;
    }
    b["a"]({
      title: "service",
      content: e.name
    });
    this.status = "adding";
    e.count = 1;
    // service object under an unrelated name
    var bleservice = {uuid: "0000FFF0-0000-1000-8000-00805F9B34FB"};
    bleservice.characteristics = [];
    bleservice.writeEncryptionRequired = false;
    bleservice.readEncryptionRequired = false;
    this.service = bleservice;
    a.addService(bleservice);
  }
});
